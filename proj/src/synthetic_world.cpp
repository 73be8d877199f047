#include "vgrl/synthetic_world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

namespace vgrl {

namespace {

constexpr int kPlacementAttempts = 200;
constexpr int kLayoutRedraws = 20;

TimeInterval repair(double s, double e, double duration, double min_length) {
  s = std::clamp(s, 0.0, duration);
  e = std::clamp(e, 0.0, duration);
  if (s > e) std::swap(s, e);
  min_length = std::min(min_length, duration);
  if (e - s < min_length) {
    e = s + min_length;
    if (e > duration) {
      e = duration;
      s = duration - min_length;
    }
  }
  return {s, e};
}

std::vector<TimeInterval> place_segments(const std::vector<double>& lengths, double duration,
                                         std::mt19937_64& rng) {
  std::vector<TimeInterval> placed;
  for (double len : lengths) {
    std::uniform_real_distribution<double> pos(0.0, duration - len);
    bool ok = false;
    for (int a = 0; a < kPlacementAttempts && !ok; ++a) {
      const double s = pos(rng);
      const TimeInterval cand{s, s + len};
      ok = std::none_of(placed.begin(), placed.end(), [&](const TimeInterval& p) {
        return cand.start < p.end && p.start < cand.end;
      });
      if (ok) placed.push_back(cand);
    }
    if (!ok) return {};
  }
  return placed;
}

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

nlohmann::ordered_json segments_json(const SegmentSet& s, const LabelSet& labels) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& [c, ivs] : s.entries()) {
    for (const auto& iv : ivs) {
      nlohmann::ordered_json o;
      o["category"] = labels.name(c);
      o["start"] = iv.start;
      o["end"] = iv.end;
      arr.push_back(std::move(o));
    }
  }
  return arr;
}

}  // namespace

void WorldSpec::check() const {
  if (labels.size() == 0) throw std::invalid_argument("label list is empty");
  if (labels.normal() == labels.size()) throw std::invalid_argument("label list needs \"Normal\"");
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");
  if (num_features() < labels.size()) {
    throw std::invalid_argument("features must be >= number of labels (one signature channel each)");
  }
  if (!(duration_min > 0.0) || duration_max < duration_min) {
    throw std::invalid_argument("duration range must satisfy 0 < min <= max");
  }
  if (!(segment_min_frac > 0.0) || segment_max_frac < segment_min_frac || segment_max_frac > 1.0) {
    throw std::invalid_argument("segment length fractions must satisfy 0 < min <= max <= 1");
  }
  const auto& n = noise;
  if (n.precise_jitter_frac < 0.0 || n.precise_jitter_frac >= 0.5 || n.coarse_jitter_frac < 0.0 ||
      n.coarse_jitter_frac >= 0.5) {
    throw std::invalid_argument("jitter fractions must lie in [0, 0.5)");
  }
  if (n.coarse_jitter_frac < n.precise_jitter_frac) {
    throw std::invalid_argument("coarse jitter must be >= precise jitter");
  }
  if (n.category_flip_prob_coarse < 0.0 || n.category_flip_prob_coarse > 1.0) {
    throw std::invalid_argument("category flip probability must lie in [0, 1]");
  }
  if (!(feature_snr > 0.0)) throw std::invalid_argument("feature_snr must be > 0");
  if (coarse_fraction < 0.0 || coarse_fraction > 1.0) {
    throw std::invalid_argument("coarse_fraction must lie in [0, 1]");
  }
  const auto violations = labels.violation_ids().size();
  if (!category_weights.empty()) {
    if (category_weights.size() != violations) {
      throw std::invalid_argument("category_weights needs one weight per violation category");
    }
    for (double w : category_weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("category weights must be >= 0");
    }
  }
}

IngestError::IngestError(std::size_t line, const std::string& field, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ", field '" + field + "': " + what),
      line_(line),
      field_(field) {}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SegmentSet jitter_annotation(const SegmentSet& gt, double jitter_frac, double duration,
                             double min_length, std::mt19937_64& rng, double flip_prob,
                             const std::vector<CategoryId>& flip_pool) {
  if (jitter_frac < 0.0 || jitter_frac >= 0.5) {
    throw std::invalid_argument("jitter fraction must lie in [0, 0.5)");
  }
  const double a = jitter_frac * duration;
  std::uniform_real_distribution<double> shift(-a, a);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  SegmentSet out;
  for (const auto& [c, ivs] : gt.entries()) {
    CategoryId cat = c;
    if (flip_prob > 0.0 && !flip_pool.empty() && coin(rng) < flip_prob) {
      std::uniform_int_distribution<std::size_t> pick(0, flip_pool.size() - 1);
      cat = flip_pool[pick(rng)];
    }
    for (const auto& iv : ivs) {
      if (a == 0.0) {
        out.add(cat, iv);
        continue;
      }
      const double s = iv.start + shift(rng);
      const double e = iv.end + shift(rng);
      out.add(cat, repair(s, e, duration, min_length));
    }
  }
  out.normalize();
  return out;
}

AnnotatedVideo generate_video(const WorldSpec& spec, std::size_t index) {
  std::mt19937_64 rng(derive_seed(spec.seed, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  AnnotatedVideo v;
  char id[32];
  std::snprintf(id, sizeof id, "v%06zu", index);
  v.video_id = id;
  v.tier = unit(rng) < spec.coarse_fraction ? Tier::coarse : Tier::precise;
  // Millisecond resolution so the full span renders exactly in completions.
  v.duration = std::round(
                   std::uniform_real_distribution<double>(spec.duration_min, spec.duration_max)(rng) *
                   1000.0) /
               1000.0;

  const auto violations = spec.labels.violation_ids();
  const std::size_t k = std::uniform_int_distribution<std::size_t>(0, spec.max_segments)(rng);
  if (k > violations.size()) {
    throw GenerationError("cannot draw " + std::to_string(k) + " distinct violation categories from " +
                          std::to_string(violations.size()));
  }

  // Distinct categories, weighted draw without replacement.
  std::vector<double> weights = spec.category_weights.empty()
                                    ? std::vector<double>(violations.size(), 1.0)
                                    : spec.category_weights;
  std::vector<CategoryId> cats;
  for (std::size_t i = 0; i < k; ++i) {
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const std::size_t j = pick(rng);
    cats.push_back(violations[j]);
    weights[j] = 0.0;
  }

  std::vector<TimeInterval> placed;
  if (k > 0) {
    std::uniform_real_distribution<double> frac(spec.segment_min_frac, spec.segment_max_frac);
    for (int r = 0; r < kLayoutRedraws && placed.empty(); ++r) {
      std::vector<double> lengths(k);
      for (auto& len : lengths) len = frac(rng) * v.duration;
      placed = place_segments(lengths, v.duration, rng);
    }
    if (placed.empty()) {
      throw GenerationError("could not place " + std::to_string(k) +
                            " non-overlapping segments in video " + v.video_id);
    }
    for (std::size_t i = 0; i < k; ++i) v.ground_truth.add(cats[i], placed[i]);
  } else {
    v.ground_truth.add(spec.labels.normal(), {0.0, v.duration});
  }
  v.ground_truth.normalize();

  const std::size_t B = spec.bins;
  const std::size_t F = spec.num_features();
  const double w = v.duration / static_cast<double>(B);
  v.bins = FeatureMatrix(B, F);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t f = 0; f < F; ++f) v.bins(b, f) = noise(rng);
  }
  for (std::size_t i = 0; i < placed.size(); ++i) {
    const std::size_t ch = signature_channel(cats[i]);
    for (std::size_t b = 0; b < B; ++b) {
      const double b0 = static_cast<double>(b) * w;
      const double frac = overlap(b0, b0 + w, placed[i].start, placed[i].end) / w;
      v.bins(b, ch) += spec.feature_snr * frac;
    }
  }

  if (k == 0) {
    v.annotation = v.ground_truth;  // Normal spans the video; nothing to jitter
  } else {
    const bool coarse = v.tier == Tier::coarse;
    const double jitter = coarse ? spec.noise.coarse_jitter_frac : spec.noise.precise_jitter_frac;
    const double flip = coarse ? spec.noise.category_flip_prob_coarse : 0.0;
    v.annotation = jitter_annotation(v.ground_truth, jitter, v.duration, w, rng, flip, violations);
  }
  return v;
}

std::vector<AnnotatedVideo> generate_dataset(const WorldSpec& spec) {
  spec.check();
  std::vector<AnnotatedVideo> out;
  out.reserve(spec.num_videos);
  for (std::size_t i = 0; i < spec.num_videos; ++i) out.push_back(generate_video(spec, i));
  return out;
}

std::string dataset_line(const AnnotatedVideo& v, const LabelSet& labels) {
  nlohmann::ordered_json j;
  j["video_id"] = v.video_id;
  j["duration"] = v.duration;
  j["tier"] = std::string(to_string(v.tier));
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t b = 0; b < v.bins.bins(); ++b) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t f = 0; f < v.bins.features(); ++f) row.push_back(v.bins(b, f));
    rows.push_back(std::move(row));
  }
  j["bins"] = std::move(rows);
  j["ground_truth"] = segments_json(v.ground_truth, labels);
  j["annotation"] = segments_json(v.annotation, labels);
  return j.dump();
}

void write_dataset(const std::vector<AnnotatedVideo>& videos, const LabelSet& labels,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  for (const auto& v : videos) out << dataset_line(v, labels) << '\n';
  if (!out) throw std::runtime_error("failed writing dataset " + path.string());
}

namespace {

SegmentSet read_segments(const nlohmann::json& arr, const LabelSet& labels, double duration,
                         std::size_t line, const std::string& field) {
  if (!arr.is_array()) throw IngestError(line, field, "expected an array");
  SegmentSet s;
  for (const auto& o : arr) {
    if (!o.is_object() || !o.contains("category") || !o.contains("start") || !o.contains("end")) {
      throw IngestError(line, field, "entries need category, start and end");
    }
    if (!o["category"].is_string() || !o["start"].is_number() || !o["end"].is_number()) {
      throw IngestError(line, field, "bad entry value type");
    }
    const auto name = o["category"].get<std::string>();
    const CategoryId c = labels.find(name);
    if (c == labels.size()) throw IngestError(line, field, "unknown category " + name);
    const TimeInterval iv{o["start"].get<double>(), o["end"].get<double>()};
    if (!iv.valid()) throw IngestError(line, field, "invalid interval (start > end or negative)");
    if (iv.end > duration) throw IngestError(line, field, "interval exceeds duration");
    s.add(c, iv);
  }
  s.normalize();
  return s;
}

}  // namespace

std::vector<AnnotatedVideo> read_dataset(const std::filesystem::path& path, const LabelSet& labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(0, "path", "cannot open " + path.string());
  std::vector<AnnotatedVideo> out;
  std::string text;
  std::size_t line = 0;
  std::size_t width = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw IngestError(line, "line", "not a JSON object");
    for (const char* key : {"video_id", "duration", "tier", "bins", "ground_truth", "annotation"}) {
      if (!j.contains(key)) throw IngestError(line, key, "missing");
    }
    AnnotatedVideo v;
    if (!j["video_id"].is_string()) throw IngestError(line, "video_id", "expected a string");
    v.video_id = j["video_id"].get<std::string>();
    if (!j["duration"].is_number() || !(j["duration"].get<double>() > 0.0)) {
      throw IngestError(line, "duration", "expected a positive number");
    }
    v.duration = j["duration"].get<double>();
    try {
      v.tier = tier_from_string(j["tier"].is_string() ? j["tier"].get<std::string>() : "");
    } catch (const std::invalid_argument& e) {
      throw IngestError(line, "tier", e.what());
    }
    const auto& rows = j["bins"];
    if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty()) {
      throw IngestError(line, "bins", "expected a non-empty matrix");
    }
    const std::size_t F = rows[0].size();
    if (width != 0 && F != width) throw IngestError(line, "bins", "feature width differs from earlier lines");
    width = F;
    v.bins = FeatureMatrix(rows.size(), F);
    for (std::size_t b = 0; b < rows.size(); ++b) {
      if (!rows[b].is_array() || rows[b].size() != F) throw IngestError(line, "bins", "ragged row");
      for (std::size_t f = 0; f < F; ++f) {
        if (!rows[b][f].is_number()) throw IngestError(line, "bins", "non-numeric feature");
        v.bins(b, f) = rows[b][f].get<double>();
      }
    }
    v.ground_truth = read_segments(j["ground_truth"], labels, v.duration, line, "ground_truth");
    v.annotation = read_segments(j["annotation"], labels, v.duration, line, "annotation");
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace vgrl
