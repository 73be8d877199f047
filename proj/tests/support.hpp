#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "vgrl/core_types.hpp"
#include "vgrl/policy.hpp"
#include "vgrl/synthetic_world.hpp"

namespace vgrl::testing {

inline WorldSpec small_world(std::uint64_t seed, std::size_t videos = 20) {
  WorldSpec w;
  w.seed = seed;
  w.num_videos = videos;
  return w;
}

// Log-softmax written out independently of the library.
inline std::vector<double> ref_log_softmax(const std::vector<double>& z) {
  double m = z[0];
  for (double x : z) m = std::max(m, x);
  double s = 0.0;
  for (double x : z) s += std::exp(x - m);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - m - std::log(s);
  return out;
}

inline double ref_dot(std::span<const double> w, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

// Score-function gradient assembled from the softmax definition, decision by
// decision, for cross-checking the library.
inline PolicyGradient ref_score_gradient(const PolicyParameters& p, const PolicyInput& in,
                                         const SampleTrace& t) {
  PolicyGradient g(p.shape(), p.temperature());
  const double it = 1.0 / p.temperature();
  for (std::size_t c = 0; c < t.decisions.size(); ++c) {
    const auto& d = t.decisions[c];
    std::vector<double> zp = {it * ref_dot(p.presence(c, 0), in.pooled),
                              it * ref_dot(p.presence(c, 1), in.pooled)};
    const auto lp = ref_log_softmax(zp);
    for (std::size_t k = 0; k < 2; ++k) {
      const double e = (d.present ? k == 1 : k == 0) ? 1.0 : 0.0;
      auto row = g.presence(c, k);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += it * (e - std::exp(lp[k])) * in.pooled[j];
    }
    if (!d.present) continue;
    std::vector<double> zs(in.bins);
    for (std::size_t b = 0; b < in.bins; ++b) zs[b] = it * ref_dot(p.start(c), in.bin(b));
    const auto ls = ref_log_softmax(zs);
    auto gs = g.start(c);
    for (std::size_t b = 0; b < in.bins; ++b) {
      const double e = b == d.start_bin ? 1.0 : 0.0;
      const auto x = in.bin(b);
      for (std::size_t j = 0; j < gs.size(); ++j) gs[j] += it * (e - std::exp(ls[b])) * x[j];
    }
    const std::size_t n = in.bins - d.start_bin;
    std::vector<double> ze(n);
    for (std::size_t o = 0; o < n; ++o) ze[o] = it * ref_dot(p.end(c), in.bin(d.start_bin + o));
    const auto le = ref_log_softmax(ze);
    auto ge = g.end(c);
    for (std::size_t o = 0; o < n; ++o) {
      const double e = o == d.end_offset ? 1.0 : 0.0;
      const auto x = in.bin(d.start_bin + o);
      for (std::size_t j = 0; j < ge.size(); ++j) ge[j] += it * (e - std::exp(le[o])) * x[j];
    }
  }
  return g;
}

}  // namespace vgrl::testing
