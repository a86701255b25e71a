#include "egoscene/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "egoscene/log.hpp"

namespace egoscene::experiment {

FoldPlan make_folds(std::vector<std::string> participants, int k,
                    std::uint64_t seed, int n_val) {
  if (k < 1 || participants.size() < static_cast<std::size_t>(k)) {
    throw Error("make_folds: need at least k=" + std::to_string(k) +
                " participants, have " + std::to_string(participants.size()));
  }
  std::sort(participants.begin(), participants.end());  // input-order independent
  Rng rng(derive_seed(seed, "folds"));
  rng.shuffle(participants);

  FoldPlan plan;
  plan.k = k;
  plan.test_folds.resize(k);
  for (std::size_t i = 0; i < participants.size(); ++i) {
    plan.test_folds[i % k].push_back(participants[i]);
  }

  plan.validation.resize(k);
  for (int f = 0; f < k; ++f) {
    std::vector<std::string> train_side;
    for (int g = 0; g < k; ++g) {
      if (g == f) continue;
      train_side.insert(train_side.end(), plan.test_folds[g].begin(),
                        plan.test_folds[g].end());
    }
    const int n = std::min<int>(n_val, std::max<int>(0, static_cast<int>(train_side.size()) - 1));
    plan.validation[f] = n > 0 ? select_validation(train_side, n, derive_seed(seed, "val", f))
                               : std::vector<std::string>{};
  }
  return plan;
}

std::vector<std::string> select_validation(
    const std::vector<std::string>& train_participants, int n,
    std::uint64_t seed) {
  if (n == 0) return {};
  if (n < 0 || train_participants.size() <= static_cast<std::size_t>(n)) {
    throw Error("select_validation: cannot take " + std::to_string(n) +
                " of " + std::to_string(train_participants.size()) +
                " participants");
  }
  std::vector<std::string> pool = train_participants;
  std::sort(pool.begin(), pool.end());
  Rng rng(seed);
  rng.shuffle(pool);
  pool.resize(static_cast<std::size_t>(n));
  std::sort(pool.begin(), pool.end());
  return pool;
}

int select_best_epoch(const std::vector<double>& val_losses) {
  if (val_losses.empty()) return 0;
  int best = 1;
  for (std::size_t i = 1; i < val_losses.size(); ++i) {
    if (val_losses[i] < val_losses[best - 1]) best = static_cast<int>(i) + 1;
  }
  return best;
}

namespace {

// Dropout changes activation variances between train and eval mode, which
// skews the batch-norm running statistics collected during training.
// Re-estimate them from a fixed training subset with dropout off so that
// eval-mode normalization sees eval-mode distributions.
void refresh_bn_stats(Model<float>& model,
                      const std::vector<const Segment*>& train_segments) {
  constexpr std::size_t kCalibrationCap = 128;
  const std::size_t n = std::min(kCalibrationCap, train_segments.size());
  std::vector<const Segment*> subset(train_segments.begin(),
                                     train_segments.begin() + n);
  Rng dummy(0);
  model.forward(batch_from_segments(subset), nn::Mode::calibrate, dummy);
}

double loss_over(Model<float>& model,
                 const std::vector<const Segment*>& segments, int batch_size) {
  double total = 0.0;
  for (std::size_t off = 0; off < segments.size();
       off += static_cast<std::size_t>(batch_size)) {
    const std::size_t n =
        std::min<std::size_t>(batch_size, segments.size() - off);
    std::vector<const Segment*> chunk(segments.begin() + off,
                                      segments.begin() + off + n);
    std::vector<int> labels;
    labels.reserve(n);
    for (const Segment* s : chunk) labels.push_back(scene_index(*s->label));
    nn::Tensor<float> logits = model.forward_eval(batch_from_segments(chunk));
    total += static_cast<double>(
                 nn::softmax_cross_entropy<float>(logits, labels, nullptr)) *
             static_cast<double>(n);
  }
  return total / static_cast<double>(segments.size());
}

}  // namespace

TrainResult train(Model<float>& model,
                  const std::vector<const Segment*>& train_segments,
                  const std::vector<const Segment*>& val_segments,
                  const TrainConfig& config) {
  if (train_segments.empty()) {
    throw Error("train: empty training set");
  }
  for (const Segment* s : train_segments) {
    if (!s->label) throw Error("train: unlabeled segment in training set");
  }
  for (const Segment* s : val_segments) {
    if (!s->label) throw Error("train: unlabeled segment in validation set");
  }

  auto params = model.params();
  nn::AdamState<float> adam;
  adam.lr = static_cast<float>(config.lr);
  adam.beta1 = static_cast<float>(config.beta1);
  adam.beta2 = static_cast<float>(config.beta2);
  adam.init(params);

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<nn::Tensor<float>> best_snapshot;
  std::vector<double> val_losses;

  std::vector<std::size_t> order(train_segments.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, "shuffle", epoch));
    Rng dropout_rng(derive_seed(config.seed, "dropout", epoch));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t off = 0; off < order.size();
         off += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t n =
          std::min<std::size_t>(config.batch_size, order.size() - off);
      std::vector<const Segment*> chunk;
      std::vector<int> labels;
      chunk.reserve(n);
      labels.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const Segment* s = train_segments[order[off + i]];
        chunk.push_back(s);
        labels.push_back(scene_index(*s->label));
      }
      nn::Tensor<float> logits =
          model.forward(batch_from_segments(chunk), nn::Mode::train, dropout_rng);
      nn::Tensor<float> glogits;
      const float loss = nn::softmax_cross_entropy<float>(logits, labels, &glogits);
      if (!std::isfinite(loss)) {
        throw Error("train: diverged (non-finite loss) at epoch " +
                    std::to_string(epoch) + ", batch offset " +
                    std::to_string(off));
      }
      epoch_loss += static_cast<double>(loss) * static_cast<double>(n);
      model.backward(glogits);
      nn::adam_step(params, adam);
    }
    epoch_loss /= static_cast<double>(order.size());
    refresh_bn_stats(model, train_segments);

    EpochPoint point;
    point.epoch = epoch;
    point.train_loss = epoch_loss;
    point.val_loss = val_segments.empty()
                         ? std::numeric_limits<double>::quiet_NaN()
                         : loss_over(model, val_segments, config.batch_size);
    result.curve.push_back(point);
    LOG_INFO("epoch " << epoch << " train_loss " << point.train_loss
                      << " val_loss " << point.val_loss);

    if (val_segments.empty()) {
      // no model selection possible; fall back to the final epoch
      result.best_epoch = epoch;
      result.best_val_loss = epoch_loss;
      continue;
    }
    val_losses.push_back(point.val_loss);
    const int best = select_best_epoch(val_losses);
    if (best != result.best_epoch) {
      result.best_epoch = best;
      result.best_val_loss = val_losses[best - 1];
      best_snapshot = model.snapshot();
    }
    if (epoch - result.best_epoch >= config.patience) break;
  }

  if (!best_snapshot.empty()) {
    model.restore(best_snapshot);
  }
  return result;
}

std::vector<SceneLabel> predict_batch(Model<float>& model,
                                      const std::vector<const Segment*>& segments,
                                      int batch_size) {
  std::vector<SceneLabel> out;
  out.reserve(segments.size());
  for (std::size_t off = 0; off < segments.size();
       off += static_cast<std::size_t>(batch_size)) {
    const std::size_t n =
        std::min<std::size_t>(batch_size, segments.size() - off);
    std::vector<const Segment*> chunk(segments.begin() + off,
                                      segments.begin() + off + n);
    nn::Tensor<float> logits = model.forward_eval(batch_from_segments(chunk));
    const std::size_t C = logits.dim(1);
    for (std::size_t b = 0; b < n; ++b) {
      out.push_back(scene_from_index(nn::argmax_class(logits.data() + b * C, C)));
    }
  }
  return out;
}

EvalResult tally(const std::vector<SceneLabel>& truth,
                 const std::vector<SceneLabel>& predictions) {
  if (truth.empty() || truth.size() != predictions.size()) {
    throw Error("tally: need matching non-empty truth/prediction lists");
  }
  EvalResult r;
  std::array<std::array<std::int64_t, kNumScenes>, kNumScenes> counts{};
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = scene_index(truth[i]);
    const int p = scene_index(predictions[i]);
    ++counts[t][p];
    ++r.true_counts[t];
    if (t == p) ++correct;
  }
  r.total = static_cast<std::int64_t>(truth.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
  for (int t = 0; t < kNumScenes; ++t) {
    if (r.true_counts[t] == 0) continue;
    for (int p = 0; p < kNumScenes; ++p) {
      r.confusion[t][p] = static_cast<double>(counts[t][p]) /
                          static_cast<double>(r.true_counts[t]);
    }
  }
  return r;
}

EvalResult evaluate(Model<float>& model,
                    const std::vector<const Segment*>& test_segments,
                    int batch_size) {
  if (test_segments.empty()) {
    throw Error("evaluate: empty test set");
  }
  std::vector<SceneLabel> truth;
  truth.reserve(test_segments.size());
  for (const Segment* s : test_segments) {
    if (!s->label) throw Error("evaluate: unlabeled segment in test set");
    truth.push_back(*s->label);
  }
  return tally(truth, predict_batch(model, test_segments, batch_size));
}

double constant_accuracy(SceneLabel guess,
                         const std::vector<const Segment*>& test_segments) {
  if (test_segments.empty()) {
    throw Error("constant_accuracy: empty test set");
  }
  std::int64_t correct = 0;
  for (const Segment* s : test_segments) {
    if (!s->label) throw Error("constant_accuracy: unlabeled segment");
    if (*s->label == guess) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_segments.size());
}

ModelReport cross_validate(const Corpus& corpus, ModelKind kind, int k,
                           const TrainConfig& config, const FoldHook& hook) {
  std::map<std::string, const ParticipantData*> by_id;
  std::vector<std::string> ids;
  for (const auto& p : corpus.participants) {
    by_id[p.meta.participant_id] = &p;
    ids.push_back(p.meta.participant_id);
  }

  const FoldPlan plan = make_folds(ids, k, config.seed, config.val_participants);

  ModelReport report;
  report.kind = kind;
  {
    Rng tmp(0);
    Model<float> probe(ModelSpec::of(kind), tmp, config.dropout);
    report.param_count = probe.count_params();
  }

  auto collect = [&](const std::set<std::string>& who) {
    std::vector<const Segment*> segs;
    for (const auto& id : who) {
      for (const Segment& s : by_id.at(id)->segments) segs.push_back(&s);
    }
    return segs;
  };

  for (int f = 0; f < k; ++f) {
    std::set<std::string> test_ids(plan.test_folds[f].begin(), plan.test_folds[f].end());
    std::set<std::string> val_ids(plan.validation[f].begin(), plan.validation[f].end());
    std::set<std::string> train_ids;
    for (const auto& id : ids) {
      if (!test_ids.count(id) && !val_ids.count(id)) train_ids.insert(id);
    }

    TrainConfig fold_cfg = config;
    fold_cfg.seed = derive_seed(config.seed, "fold", static_cast<std::uint64_t>(f));
    Rng init_rng(derive_seed(fold_cfg.seed, "init"));
    Model<float> model(ModelSpec::of(kind), init_rng, config.dropout);

    FoldRecord rec;
    rec.fold = f;
    rec.train_result = train(model, collect(train_ids), collect(val_ids), fold_cfg);
    rec.eval = evaluate(model, collect(test_ids), config.batch_size);
    rec.accuracy = rec.eval.accuracy;
    if (hook) hook(f, model, rec);
    report.folds.push_back(std::move(rec));
  }

  double acc = 0.0;
  for (const auto& rec : report.folds) acc += rec.accuracy;
  report.mean_accuracy = acc / static_cast<double>(report.folds.size());

  // unweighted average of row-normalized fold matrices; a row averages only
  // the folds where that class occurred in test data
  for (int t = 0; t < kNumScenes; ++t) {
    int present = 0;
    std::array<double, kNumScenes> row{};
    for (const auto& rec : report.folds) {
      if (rec.eval.true_counts[t] == 0) continue;
      ++present;
      for (int p = 0; p < kNumScenes; ++p) row[p] += rec.eval.confusion[t][p];
    }
    if (present > 0) {
      for (int p = 0; p < kNumScenes; ++p) {
        report.mean_confusion[t][p] = row[p] / present;
      }
    }
  }
  return report;
}

}  // namespace egoscene::experiment
