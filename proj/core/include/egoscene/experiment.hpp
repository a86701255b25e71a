#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "egoscene/model.hpp"
#include "egoscene/types.hpp"

namespace egoscene::experiment {

// Speaker-disjoint folds: participants partitioned into k test folds, plus a
// per-fold validation set drawn from that fold's training side.
struct FoldPlan {
  int k = 0;
  std::vector<std::vector<std::string>> test_folds;
  std::vector<std::vector<std::string>> validation;
};

// Seeded shuffle then round-robin assignment; fold sizes differ by at most 1.
FoldPlan make_folds(std::vector<std::string> participants, int k,
                    std::uint64_t seed, int n_val = 4);

// n distinct participants for model selection, removed from training.
std::vector<std::string> select_validation(
    const std::vector<std::string>& train_participants, int n,
    std::uint64_t seed);

struct TrainConfig {
  int batch_size = 64;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double dropout = 0.3;
  int max_epochs = 50;
  int patience = 10;       // epochs without validation improvement
  int val_participants = 4;
  std::uint64_t seed = 0;
};

struct EpochPoint {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

// 1-based index of the first minimum of a validation-loss sequence.
int select_best_epoch(const std::vector<double>& val_losses);

struct TrainResult {
  std::vector<EpochPoint> curve;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

// Minibatch Adam training with per-epoch validation; on return the model
// holds the parameters of the epoch with the lowest validation loss
// (final epoch when the validation set is empty). Throws on divergence.
TrainResult train(Model<float>& model,
                  const std::vector<const Segment*>& train_segments,
                  const std::vector<const Segment*>& val_segments,
                  const TrainConfig& config);

struct EvalResult {
  double accuracy = 0.0;
  // confusion[r][c]: fraction of true-class-r samples predicted as c
  std::array<std::array<double, kNumScenes>, kNumScenes> confusion{};
  std::array<std::int64_t, kNumScenes> true_counts{};
  std::int64_t total = 0;
};

std::vector<SceneLabel> predict_batch(Model<float>& model,
                                      const std::vector<const Segment*>& segments,
                                      int batch_size = 64);

// Accuracy and row-normalized confusion from (truth, prediction) pairs.
EvalResult tally(const std::vector<SceneLabel>& truth,
                 const std::vector<SceneLabel>& predictions);

EvalResult evaluate(Model<float>& model,
                    const std::vector<const Segment*>& test_segments,
                    int batch_size = 64);


// Accuracy of a predictor that always answers `guess`.
double constant_accuracy(SceneLabel guess,
                         const std::vector<const Segment*>& test_segments);

struct FoldRecord {
  int fold = 0;
  double accuracy = 0.0;
  EvalResult eval;
  TrainResult train_result;
};

struct ModelReport {
  ModelKind kind = ModelKind::tdnn_small;
  long long param_count = 0;
  std::vector<FoldRecord> folds;
  double mean_accuracy = 0.0;
  std::array<std::array<double, kNumScenes>, kNumScenes> mean_confusion{};
};

// Called after each fold finishes, with the trained model still loaded;
// used to persist checkpoints and curves.
using FoldHook = std::function<void(int fold, Model<float>& model,
                                    const FoldRecord& record)>;

// Trains one model per fold and averages accuracy and row-normalized
// confusion matrices across folds. Fold f trains with seed derived from
// (config.seed, "fold", f); results do not depend on fold execution order.
ModelReport cross_validate(const Corpus& corpus, ModelKind kind, int k,
                           const TrainConfig& config,
                           const FoldHook& hook = {});

}  // namespace egoscene::experiment
