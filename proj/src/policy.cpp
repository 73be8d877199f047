#include "vgrl/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

#include "vgrl/structured_output.hpp"

namespace vgrl {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoints assume little-endian");

constexpr char kMagic[8] = {'V', 'G', 'R', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

// Position and edge-indicator features are scaled to the spread of the
// unit-variance bin features so their weights move at a comparable rate.
constexpr double kEdgeScale = 2.0;

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void add_scaled(std::span<double> dst, double alpha, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
}

/// In-place log-softmax.
void log_softmax(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m == std::numeric_limits<double>::infinity()) {
    for (auto& x : v) x = (x == m) ? 0.0 : -std::numeric_limits<double>::infinity();
    return;
  }
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  const double lse = m + std::log(s);
  for (auto& x : v) x -= lse;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Inverse-CDF draw from log-probabilities.
std::size_t draw(const std::vector<double>& logp, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < logp.size(); ++i) {
    const double p = std::exp(logp[i]);
    if (p > 0.0) last_positive = i;
    acc += p;
    if (u < acc) return i;
  }
  return last_positive;
}

// Logit vectors for one category's three decision heads.
struct Heads {
  const PolicyParameters& params;
  const PolicyInput& input;
  double inv_t;

  Heads(const PolicyParameters& p, const PolicyInput& in)
      : params(p), input(in), inv_t(1.0 / p.temperature()) {}

  [[nodiscard]] std::vector<double> presence(std::size_t c) const {
    std::vector<double> l(2);
    for (std::size_t k = 0; k < 2; ++k) l[k] = inv_t * dot(params.presence(c, k), input.pooled);
    log_softmax(l);
    return l;
  }

  [[nodiscard]] std::vector<double> start(std::size_t c) const {
    std::vector<double> l(input.bins);
    for (std::size_t b = 0; b < input.bins; ++b) l[b] = inv_t * dot(params.start(c), input.bin(b));
    log_softmax(l);
    return l;
  }

  /// Offsets 0..bins-1-start_bin.
  [[nodiscard]] std::vector<double> end(std::size_t c, std::size_t start_bin) const {
    std::vector<double> l(input.bins - start_bin);
    for (std::size_t o = 0; o < l.size(); ++o) {
      l[o] = inv_t * dot(params.end(c), input.bin(start_bin + o));
    }
    log_softmax(l);
    return l;
  }
};

void check_shapes(const PolicyParameters& params, const PolicyInput& input) {
  const auto& s = params.shape();
  if (input.pooled.size() != s.pooled_dim || input.bins == 0 ||
      input.features.size() != input.bins * s.bin_dim) {
    throw std::invalid_argument("policy input does not match parameter shape");
  }
}

std::string think_text(const PolicyInput& input, std::size_t categories) {
  return "analyzing " + std::to_string(input.bins) + " bins for " + std::to_string(categories) +
         " categories";
}

Completion finish(SampleTrace trace, const PolicyInput& input, const LabelSet& labels) {
  ReasoningOutput out;
  out.think = think_text(input, labels.size());
  out.predictions = decode(trace, input);
  return {render(out, labels), std::move(trace)};
}

}  // namespace

PolicyShape PolicyShape::for_features(std::size_t categories, std::size_t raw_features) {
  return {categories, 2 * raw_features + 1, 3 * raw_features + 4};
}

PolicyInput make_policy_input(const FeatureMatrix& bins, double duration) {
  const std::size_t B = bins.bins();
  const std::size_t F = bins.features();
  if (B == 0 || F == 0) throw std::invalid_argument("empty feature matrix");
  PolicyInput in;
  in.duration = duration;
  in.bins = B;
  in.pooled.assign(2 * F + 1, 0.0);
  for (std::size_t f = 0; f < F; ++f) {
    double sum = 0.0;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < B; ++b) {
      sum += bins(b, f);
      mx = std::max(mx, bins(b, f));
    }
    in.pooled[f] = sum / static_cast<double>(B);
    in.pooled[F + f] = mx;
  }
  in.pooled[2 * F] = 1.0;

  const std::size_t D = 3 * F + 4;
  in.features.assign(B * D, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    double* row = in.features.data() + b * D;
    for (std::size_t f = 0; f < F; ++f) {
      const double x = bins(b, f);
      const double prev = b > 0 ? bins(b - 1, f) : 0.0;
      const double next = b + 1 < B ? bins(b + 1, f) : 0.0;
      row[f] = x;
      row[F + f] = x - prev;
      row[2 * F + f] = x - next;
    }
    row[3 * F] = B > 1 ? kEdgeScale * static_cast<double>(b) / static_cast<double>(B - 1) : 0.0;
    row[3 * F + 1] = b == 0 ? kEdgeScale : 0.0;
    row[3 * F + 2] = b + 1 == B ? kEdgeScale : 0.0;
    row[3 * F + 3] = 1.0;
  }
  return in;
}

PolicyParameters::PolicyParameters(PolicyShape shape, double temperature)
    : shape_(shape), w_(shape.size(), 0.0) {
  set_temperature(temperature);
}

PolicyParameters PolicyParameters::random(PolicyShape shape, std::uint64_t seed, double scale) {
  PolicyParameters p(shape);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  for (auto& x : p.w_) x = n(rng);
  return p;
}

void PolicyParameters::set_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("temperature must be > 0");
  temperature_ = t;
}

std::size_t PolicyParameters::block(std::size_t c) const {
  if (c >= shape_.categories) throw RangeError("category index out of range");
  return c * (2 * shape_.pooled_dim + 2 * shape_.bin_dim);
}

std::span<double> PolicyParameters::presence(std::size_t c, std::size_t k) {
  return {w_.data() + block(c) + k * shape_.pooled_dim, shape_.pooled_dim};
}
std::span<const double> PolicyParameters::presence(std::size_t c, std::size_t k) const {
  return {w_.data() + block(c) + k * shape_.pooled_dim, shape_.pooled_dim};
}
std::span<double> PolicyParameters::start(std::size_t c) {
  return {w_.data() + block(c) + 2 * shape_.pooled_dim, shape_.bin_dim};
}
std::span<const double> PolicyParameters::start(std::size_t c) const {
  return {w_.data() + block(c) + 2 * shape_.pooled_dim, shape_.bin_dim};
}
std::span<double> PolicyParameters::end(std::size_t c) {
  return {w_.data() + block(c) + 2 * shape_.pooled_dim + shape_.bin_dim, shape_.bin_dim};
}
std::span<const double> PolicyParameters::end(std::size_t c) const {
  return {w_.data() + block(c) + 2 * shape_.pooled_dim + shape_.bin_dim, shape_.bin_dim};
}

void PolicyParameters::axpy(double alpha, const PolicyParameters& other) {
  if (!(other.shape_ == shape_)) throw std::invalid_argument("shape mismatch in axpy");
  for (std::size_t i = 0; i < w_.size(); ++i) w_[i] += alpha * other.w_[i];
}

double PolicyParameters::norm() const {
  double s = 0.0;
  for (double x : w_) s += x * x;
  return std::sqrt(s);
}

bool PolicyParameters::finite() const {
  return std::all_of(w_.begin(), w_.end(), [](double x) { return std::isfinite(x); });
}

std::uint64_t PolicyParameters::hash() const {
  const std::uint64_t dims[3] = {shape_.categories, shape_.pooled_dim, shape_.bin_dim};
  std::uint64_t h = fnv1a(dims, sizeof dims);
  h = fnv1a(&temperature_, sizeof temperature_, h);
  return fnv1a(w_.data(), w_.size() * sizeof(double), h);
}

SegmentSet decode(const SampleTrace& trace, const PolicyInput& input) {
  SegmentSet out;
  const double w = input.duration / static_cast<double>(input.bins);
  for (std::size_t c = 0; c < trace.decisions.size(); ++c) {
    const auto& d = trace.decisions[c];
    if (!d.present) continue;
    const std::size_t end_bin = d.start_bin + d.end_offset;
    const double end = end_bin + 1 >= input.bins ? input.duration : static_cast<double>(end_bin + 1) * w;
    out.add(c, {static_cast<double>(d.start_bin) * w, end});
  }
  return out;
}

Completion sample(const PolicyParameters& params, const PolicyInput& input,
                  const LabelSet& labels, std::uint64_t seed) {
  check_shapes(params, input);
  if (params.shape().categories != labels.size()) {
    throw std::invalid_argument("label count does not match policy categories");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Heads heads(params, input);

  SampleTrace trace;
  trace.decisions.resize(labels.size());
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto& d = trace.decisions[c];
    const auto lp = heads.presence(c);
    const std::size_t k = draw(lp, unif(rng));
    d.present = k == 1;
    d.presence_logprob = lp[k];
    trace.total_logprob += lp[k];
    if (!d.present) continue;
    const auto ls = heads.start(c);
    d.start_bin = draw(ls, unif(rng));
    d.start_logprob = ls[d.start_bin];
    const auto le = heads.end(c, d.start_bin);
    d.end_offset = draw(le, unif(rng));
    d.end_logprob = le[d.end_offset];
    trace.total_logprob += d.start_logprob + d.end_logprob;
  }
  return finish(std::move(trace), input, labels);
}

Completion greedy(const PolicyParameters& params, const PolicyInput& input,
                  const LabelSet& labels) {
  check_shapes(params, input);
  if (params.shape().categories != labels.size()) {
    throw std::invalid_argument("label count does not match policy categories");
  }
  const Heads heads(params, input);
  SampleTrace trace;
  trace.decisions.resize(labels.size());
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto& d = trace.decisions[c];
    const auto lp = heads.presence(c);
    const std::size_t k = argmax(lp);
    d.present = k == 1;
    d.presence_logprob = lp[k];
    trace.total_logprob += lp[k];
    if (!d.present) continue;
    const auto ls = heads.start(c);
    d.start_bin = argmax(ls);
    d.start_logprob = ls[d.start_bin];
    const auto le = heads.end(c, d.start_bin);
    d.end_offset = argmax(le);
    d.end_logprob = le[d.end_offset];
    trace.total_logprob += d.start_logprob + d.end_logprob;
  }
  return finish(std::move(trace), input, labels);
}

double accumulate_grad_logprob(const PolicyParameters& params, const PolicyInput& input,
                               const SampleTrace& trace, double scale, PolicyGradient& grad) {
  check_shapes(params, input);
  const auto& shape = params.shape();
  if (trace.decisions.size() != shape.categories) {
    throw RangeError("trace has " + std::to_string(trace.decisions.size()) +
                     " decisions, policy has " + std::to_string(shape.categories) + " categories");
  }
  const bool want_grad = scale != 0.0;
  if (want_grad && !(grad.shape() == shape)) throw std::invalid_argument("gradient shape mismatch");
  const Heads heads(params, input);
  const double s = scale * heads.inv_t;

  double total = 0.0;
  for (std::size_t c = 0; c < shape.categories; ++c) {
    const auto& d = trace.decisions[c];
    const auto lp = heads.presence(c);
    const std::size_t k = d.present ? 1 : 0;
    total += lp[k];
    if (want_grad) {
      for (std::size_t j = 0; j < 2; ++j) {
        const double coef = (j == k ? 1.0 : 0.0) - std::exp(lp[j]);
        add_scaled(grad.presence(c, j), s * coef, input.pooled);
      }
    }
    if (!d.present) continue;

    if (d.start_bin >= input.bins) throw RangeError("start bin out of range");
    const auto ls = heads.start(c);
    total += ls[d.start_bin];
    if (want_grad) {
      auto g = grad.start(c);
      add_scaled(g, s, input.bin(d.start_bin));
      for (std::size_t b = 0; b < input.bins; ++b) add_scaled(g, -s * std::exp(ls[b]), input.bin(b));
    }

    if (d.end_offset >= input.bins - d.start_bin) throw RangeError("end offset out of range");
    const auto le = heads.end(c, d.start_bin);
    total += le[d.end_offset];
    if (want_grad) {
      auto g = grad.end(c);
      add_scaled(g, s, input.bin(d.start_bin + d.end_offset));
      for (std::size_t o = 0; o < le.size(); ++o) {
        add_scaled(g, -s * std::exp(le[o]), input.bin(d.start_bin + o));
      }
    }
  }
  return total;
}

double logprob(const PolicyParameters& params, const PolicyInput& input, const SampleTrace& trace) {
  PolicyGradient unused;
  return accumulate_grad_logprob(params, input, trace, 0.0, unused);
}

PolicyGradient grad_logprob(const PolicyParameters& params, const PolicyInput& input,
                            const SampleTrace& trace) {
  PolicyGradient g(params.shape(), params.temperature());
  accumulate_grad_logprob(params, input, trace, 1.0, g);
  return g;
}

SampleTrace snap_to_trace(const SegmentSet& segments, const PolicyInput& input,
                          std::size_t categories) {
  const double w = input.duration / static_cast<double>(input.bins);
  const auto last = static_cast<long>(input.bins) - 1;
  SampleTrace t;
  t.decisions.resize(categories);
  for (const auto& [c, ivs] : segments.entries()) {
    if (c >= categories) throw RangeError("category index out of range");
    const auto& iv = ivs.front();
    const long s = std::clamp(std::lround(iv.start / w), 0L, last);
    const long e = std::clamp(std::lround(iv.end / w) - 1, s, last);
    auto& d = t.decisions[c];
    d.present = true;
    d.start_bin = static_cast<std::size_t>(s);
    d.end_offset = static_cast<std::size_t>(e - s);
  }
  return t;
}

PolicyParameters train_supervised_baseline(const std::vector<TrainingView>& dataset,
                                           const PolicyParameters& init,
                                           const SupervisedOptions& opts) {
  if (dataset.empty()) throw std::invalid_argument("supervised baseline needs a non-empty dataset");
  PolicyParameters params = init;
  if (opts.epochs == 0) return params;

  std::vector<PolicyInput> inputs;
  std::vector<SampleTrace> targets;
  inputs.reserve(dataset.size());
  targets.reserve(dataset.size());
  for (const auto& v : dataset) {
    inputs.push_back(make_policy_input(v.bins(), v.duration()));
    targets.push_back(snap_to_trace(v.annotation(), inputs.back(), params.shape().categories));
  }

  PolicyGradient g(params.shape(), params.temperature());
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::fill(g.weights().begin(), g.weights().end(), 0.0);
      accumulate_grad_logprob(params, inputs[i], targets[i], 1.0, g);
      params.axpy(opts.step_size, g);
    }
  }
  return params;
}

void write_checkpoint(const std::filesystem::path& path, const PolicyParameters& params) {
  std::string buf(kMagic, sizeof kMagic);
  auto put = [&buf](const auto& v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof v);
  };
  const auto& s = params.shape();
  put(kCheckpointVersion);
  put(static_cast<std::uint32_t>(s.categories));
  put(static_cast<std::uint32_t>(s.pooled_dim));
  put(static_cast<std::uint32_t>(s.bin_dim));
  put(params.temperature());
  put(static_cast<std::uint64_t>(params.weights().size()));
  buf.append(reinterpret_cast<const char*>(params.weights().data()),
             params.weights().size() * sizeof(double));
  put(fnv1a(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

PolicyParameters read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptCheckpoint("cannot open checkpoint " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  auto get = [&](auto& v) {
    if (pos + sizeof v > buf.size()) throw CorruptCheckpoint("truncated checkpoint " + path.string());
    std::memcpy(&v, buf.data() + pos, sizeof v);
    pos += sizeof v;
  };
  if (buf.size() < sizeof kMagic || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
    throw CorruptCheckpoint("bad checkpoint header in " + path.string());
  }
  pos = sizeof kMagic;
  std::uint32_t version = 0, cats = 0, pooled = 0, bin = 0;
  double temperature = 0.0;
  std::uint64_t count = 0;
  get(version);
  if (version != kCheckpointVersion) {
    throw CorruptCheckpoint("unsupported checkpoint version " + std::to_string(version));
  }
  get(cats);
  get(pooled);
  get(bin);
  get(temperature);
  get(count);
  const PolicyShape shape{cats, pooled, bin};
  if (count != shape.size() || !(temperature > 0.0)) {
    throw CorruptCheckpoint("inconsistent checkpoint shape header in " + path.string());
  }
  if (buf.size() != pos + count * sizeof(double) + sizeof(std::uint64_t)) {
    throw CorruptCheckpoint("checkpoint size does not match header in " + path.string());
  }
  PolicyParameters params(shape, temperature);
  std::memcpy(params.weights().data(), buf.data() + pos, count * sizeof(double));
  pos += count * sizeof(double);
  std::uint64_t stored = 0;
  const std::uint64_t actual = fnv1a(buf.data(), pos);
  get(stored);
  if (stored != actual) throw CorruptCheckpoint("checkpoint checksum mismatch in " + path.string());
  return params;
}

}  // namespace vgrl
