#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgrl/core_types.hpp"

namespace vgrl {

struct NoiseSpec {
  double precise_jitter_frac = 0.02;
  double coarse_jitter_frac = 0.15;
  double category_flip_prob_coarse = 0.0;
};

struct WorldSpec {
  LabelSet labels = LabelSet::defaults();
  std::size_t num_videos = 200;
  double duration_min = 20.0;
  double duration_max = 120.0;
  std::size_t bins = 32;
  std::size_t features = 0;  // 0 -> labels.size() + 2
  std::size_t max_segments = 3;
  double segment_min_frac = 0.1;
  double segment_max_frac = 0.3;
  std::vector<double> category_weights;  // over violation categories; empty = uniform
  NoiseSpec noise;
  double feature_snr = 4.0;
  double coarse_fraction = 0.7;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t num_features() const { return features ? features : labels.size() + 2; }

  /// Throws std::invalid_argument on out-of-range fields.
  void check() const;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IngestError : public std::runtime_error {
 public:
  IngestError(std::size_t line, const std::string& field, const std::string& what);

  [[nodiscard]] std::size_t line() const { return line_; }
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// splitmix64 of (seed, index); used for per-video and per-step seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Feature channel carrying category c's signature.
inline std::size_t signature_channel(CategoryId c) { return c; }

/// Shifts every boundary by Uniform(-jitter_frac*duration, +jitter_frac*duration),
/// clamps to [0, duration], swaps inverted pairs and widens anything shorter than
/// min_length. With flip_prob > 0 a violation category is resampled from
/// `flip_pool`.
SegmentSet jitter_annotation(const SegmentSet& gt, double jitter_frac, double duration,
                             double min_length, std::mt19937_64& rng, double flip_prob = 0.0,
                             const std::vector<CategoryId>& flip_pool = {});

/// Video `index` of the world. Deterministic in (spec, index).
AnnotatedVideo generate_video(const WorldSpec& spec, std::size_t index);

std::vector<AnnotatedVideo> generate_dataset(const WorldSpec& spec);

/// JSON-lines, one video per line.
void write_dataset(const std::vector<AnnotatedVideo>& videos, const LabelSet& labels,
                   const std::filesystem::path& path);
std::string dataset_line(const AnnotatedVideo& v, const LabelSet& labels);

/// Throws IngestError naming the 1-based line and the offending field.
std::vector<AnnotatedVideo> read_dataset(const std::filesystem::path& path, const LabelSet& labels);

}  // namespace vgrl
