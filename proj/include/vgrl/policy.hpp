#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgrl/core_types.hpp"

namespace vgrl {

/// Dimensions of a linear policy over engineered features.
///   pooled_dim: per-video pooled features (mean, max per channel, bias)
///   bin_dim:    per-bin features (value, onset diff, offset diff, position,
///               first-bin flag, last-bin flag, bias)
struct PolicyShape {
  std::size_t categories = 0;
  std::size_t pooled_dim = 0;
  std::size_t bin_dim = 0;

  static PolicyShape for_features(std::size_t categories, std::size_t raw_features);

  /// Flat weight count.
  [[nodiscard]] std::size_t size() const { return categories * (2 * pooled_dim + 2 * bin_dim); }

  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

/// Engineered inputs of one video, computed once and reused for every sample.
struct PolicyInput {
  double duration = 0.0;
  std::size_t bins = 0;
  std::vector<double> pooled;    // pooled_dim
  std::vector<double> features;  // bins x bin_dim, row-major

  [[nodiscard]] std::size_t bin_dim() const { return features.size() / bins; }
  [[nodiscard]] std::span<const double> bin(std::size_t b) const {
    return {features.data() + b * bin_dim(), bin_dim()};
  }
};

PolicyInput make_policy_input(const FeatureMatrix& bins, double duration);

/// Weights of the toy policy, stored flat. Per category the layout is
/// [presence logits (2 x pooled_dim) | start weights (bin_dim) | end weights (bin_dim)].
/// Also used to hold gradients of the same shape.
class PolicyParameters {
 public:
  PolicyParameters() = default;
  explicit PolicyParameters(PolicyShape shape, double temperature = 1.0);

  static PolicyParameters random(PolicyShape shape, std::uint64_t seed, double scale);

  [[nodiscard]] const PolicyShape& shape() const { return shape_; }
  [[nodiscard]] double temperature() const { return temperature_; }
  void set_temperature(double t);

  /// Row k (0 = absent, 1 = present) of category c's presence matrix.
  std::span<double> presence(std::size_t c, std::size_t k);
  [[nodiscard]] std::span<const double> presence(std::size_t c, std::size_t k) const;
  std::span<double> start(std::size_t c);
  [[nodiscard]] std::span<const double> start(std::size_t c) const;
  std::span<double> end(std::size_t c);
  [[nodiscard]] std::span<const double> end(std::size_t c) const;

  std::vector<double>& weights() { return w_; }
  [[nodiscard]] const std::vector<double>& weights() const { return w_; }

  /// this += alpha * other
  void axpy(double alpha, const PolicyParameters& other);
  [[nodiscard]] double norm() const;
  [[nodiscard]] bool finite() const;

  /// FNV-1a over shape, temperature and weight bytes.
  [[nodiscard]] std::uint64_t hash() const;

  friend bool operator==(const PolicyParameters&, const PolicyParameters&) = default;

 private:
  [[nodiscard]] std::size_t block(std::size_t c) const;

  PolicyShape shape_;
  double temperature_ = 1.0;
  std::vector<double> w_;
};

using PolicyGradient = PolicyParameters;

struct CategoryDecision {
  bool present = false;
  double presence_logprob = 0.0;
  std::size_t start_bin = 0;
  double start_logprob = 0.0;
  std::size_t end_offset = 0;
  double end_logprob = 0.0;

  friend bool operator==(const CategoryDecision&, const CategoryDecision&) = default;
};

struct SampleTrace {
  std::vector<CategoryDecision> decisions;  // one per category
  double total_logprob = 0.0;

  friend bool operator==(const SampleTrace&, const SampleTrace&) = default;
};

struct Completion {
  std::string text;
  SampleTrace trace;
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class CorruptCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Draws one completion. Deterministic in (params, input, seed).
Completion sample(const PolicyParameters& params, const PolicyInput& input,
                  const LabelSet& labels, std::uint64_t seed);

/// Argmax decisions (ties resolve to the lowest index), rendered like sample().
Completion greedy(const PolicyParameters& params, const PolicyInput& input,
                  const LabelSet& labels);

/// Intervals in seconds encoded by a trace: [start_bin * w, (end_bin + 1) * w].
SegmentSet decode(const SampleTrace& trace, const PolicyInput& input);

/// Exact log-probability of the trace's decisions. Throws RangeError.
double logprob(const PolicyParameters& params, const PolicyInput& input, const SampleTrace& trace);

/// d logprob / d weights. Throws RangeError.
PolicyGradient grad_logprob(const PolicyParameters& params, const PolicyInput& input,
                            const SampleTrace& trace);

/// grad += scale * d logprob / d weights; returns logprob.
double accumulate_grad_logprob(const PolicyParameters& params, const PolicyInput& input,
                               const SampleTrace& trace, double scale, PolicyGradient& grad);

/// Decisions that would reproduce `segments` snapped to the bin grid (first
/// interval per category). Log-probs are left at 0.
SampleTrace snap_to_trace(const SegmentSet& segments, const PolicyInput& input,
                          std::size_t categories);

struct SupervisedOptions {
  std::size_t epochs = 0;
  double step_size = 0.05;
};

/// Maximum-likelihood fit of the annotations (SFT stand-in). Per-video
/// gradient steps in dataset order, `epochs` passes.
PolicyParameters train_supervised_baseline(const std::vector<TrainingView>& dataset,
                                           const PolicyParameters& init,
                                           const SupervisedOptions& opts);

void write_checkpoint(const std::filesystem::path& path, const PolicyParameters& params);
PolicyParameters read_checkpoint(const std::filesystem::path& path);

}  // namespace vgrl
