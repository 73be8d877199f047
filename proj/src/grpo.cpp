#include "vgrl/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "vgrl/parallel.hpp"
#include "vgrl/synthetic_world.hpp"

namespace vgrl {

void GrpoConfig::check() const {
  if (group_size < 2) throw GroupTooSmall("group_size must be >= 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
    throw std::invalid_argument("clip_epsilon must lie in (0, 1)");
  }
  if (!(kl_coeff >= 0.0) || !std::isfinite(kl_coeff)) throw std::invalid_argument("kl_coeff must be >= 0");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw std::invalid_argument("step_size must be > 0");
  if (!(std_floor > 0.0)) throw std::invalid_argument("std_floor must be > 0");
  if (inner_epochs < 1) throw std::invalid_argument("inner_epochs must be >= 1");
}

std::vector<double> compute_advantages(std::span<const double> rewards, double std_floor) {
  const std::size_t n = rewards.size();
  if (n < 2) throw GroupTooSmall("advantages need a group of at least 2, got " + std::to_string(n));
  std::vector<double> adv(n, 0.0);
  // The rounded mean of equal values can differ from them; test equality directly.
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; })) return adv;
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(n);
  const double denom = std::max(std::sqrt(var), std_floor);

  for (std::size_t i = 0; i < n; ++i) adv[i] = (rewards[i] - mean) / denom;
  return adv;
}

double kl_estimate(double logp_new, double logp_ref) {
  const double d = logp_ref - logp_new;
  return std::max(0.0, std::expm1(d) - d);
}

double clipped_surrogate(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

double clipped_surrogate_slope(double ratio, double advantage, double eps) {
  if (advantage >= 0.0) return ratio <= 1.0 + eps ? advantage : 0.0;
  return ratio >= 1.0 - eps ? advantage : 0.0;
}

StepResult grpo_step(const PolicyParameters& params, const PolicyParameters& ref,
                     const TrainingView& video, const PolicyInput& input, const GrpoConfig& cfg,
                     const RewardConfig& reward_cfg, const LabelSet& labels, std::uint64_t seed,
                     std::size_t threads) {
  cfg.check();
  if (!(params.shape() == ref.shape())) throw std::invalid_argument("policy and reference shapes differ");
  const std::size_t G = cfg.group_size;

  StepResult result;
  result.batch.video_id = video.video_id();
  auto& samples = result.batch.samples;
  samples.resize(G);
  std::vector<double> ref_logp(G);
  parallel_for(G, threads, [&](std::size_t i) {
    auto& s = samples[i];
    s.completion = sample(params, input, labels, derive_seed(seed, i));
    s.old_logprob = s.completion.trace.total_logprob;
    s.reward = score_completion(s.completion.text, video, reward_cfg, labels);
    ref_logp[i] = logprob(ref, input, s.completion.trace);
  });

  std::vector<double> rewards(G);
  for (std::size_t i = 0; i < G; ++i) rewards[i] = samples[i].reward.total;
  const auto adv = compute_advantages(rewards, cfg.std_floor);
  StepStats& stats = result.stats;
  for (std::size_t i = 0; i < G; ++i) {
    samples[i].advantage = adv[i];
    stats.mean_reward += rewards[i] / static_cast<double>(G);
    stats.mean_abs_advantage += std::abs(adv[i]) / static_cast<double>(G);
  }

  PolicyParameters current = params;
  std::vector<double> coef(G);
  std::vector<double> new_logp(G);
  for (std::size_t epoch = 0; epoch < cfg.inner_epochs; ++epoch) {
    parallel_for(G, threads, [&](std::size_t i) {
      new_logp[i] = logprob(current, input, samples[i].completion.trace);
    });

    double objective = 0.0;
    double kl = 0.0;
    for (std::size_t i = 0; i < G; ++i) {
      const double ratio = std::exp(new_logp[i] - samples[i].old_logprob);
      const double k = kl_estimate(new_logp[i], ref_logp[i]);
      objective += clipped_surrogate(ratio, adv[i], cfg.clip_epsilon) - cfg.kl_coeff * k;
      kl += k;
      // d/dθ of the per-sample objective is coef * ∇logp_new.
      coef[i] = clipped_surrogate_slope(ratio, adv[i], cfg.clip_epsilon) * ratio +
                cfg.kl_coeff * std::expm1(ref_logp[i] - new_logp[i]);
    }
    objective /= static_cast<double>(G);

    // Fixed summation order keeps the update independent of thread count.
    PolicyGradient grad(current.shape(), current.temperature());
    for (std::size_t i = 0; i < G; ++i) {
      if (coef[i] == 0.0) continue;
      accumulate_grad_logprob(current, input, samples[i].completion.trace,
                              coef[i] / static_cast<double>(G), grad);
    }
    const double gnorm = grad.norm();
    if (epoch == 0) {
      stats.mean_kl = kl / static_cast<double>(G);
      stats.grad_norm = gnorm;
      stats.objective = objective;
    }
    if (!std::isfinite(objective) || !std::isfinite(gnorm)) {
      throw NumericalDivergence("non-finite GRPO objective or gradient on video " + video.video_id(),
                                stats);
    }
    current.axpy(cfg.step_size, grad);
  }
  if (!current.finite()) throw NumericalDivergence("non-finite parameters after GRPO update", stats);
  result.params = std::move(current);
  return result;
}

}  // namespace vgrl
