#include "egoscene/types.hpp"

#include <algorithm>

#include "egoscene/errors.hpp"

namespace egoscene {

std::string_view shift_name(Shift s) {
  return s == Shift::day ? "day" : "night";
}

std::string_view role_name(Role r) {
  return r == Role::nursing ? "nursing" : "non_nursing";
}

std::optional<Shift> shift_from_name(std::string_view name) {
  if (name == "day") return Shift::day;
  if (name == "night") return Shift::night;
  return std::nullopt;
}

std::optional<Role> role_from_name(std::string_view name) {
  if (name == "nursing") return Role::nursing;
  if (name == "non_nursing") return Role::non_nursing;
  return std::nullopt;
}

std::array<std::int64_t, kNumScenes> class_histogram(const Corpus& corpus) {
  std::array<std::int64_t, kNumScenes> counts{};
  std::int64_t total = 0;
  for (const auto& p : corpus.participants) {
    for (const auto& seg : p.segments) {
      if (seg.label) {
        ++counts[scene_index(*seg.label)];
        ++total;
      }
    }
  }
  if (total == 0) {
    throw Error("class_histogram: corpus has no labeled segments");
  }
  return counts;
}

double majority_fraction(const std::array<std::int64_t, kNumScenes>& counts) {
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0.0;
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
         static_cast<double>(total);
}

}  // namespace egoscene
