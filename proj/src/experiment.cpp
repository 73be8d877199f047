#include "vgrl/experiment.hpp"

#include <fstream>

namespace vgrl {

namespace {

constexpr std::uint64_t kInitStream = 0x494E4954ULL;

nlohmann::ordered_json step_json(const StepRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["stage"] = r.stage;
  j["mean_reward"] = r.stats.mean_reward;
  j["mean_kl"] = r.stats.mean_kl;
  j["grad_norm"] = r.stats.grad_norm;
  j["seed"] = r.seed;
  return j;
}

}  // namespace

std::string report_text(const EvalReport& r) { return to_json(r).dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

PolicyParameters initial_parameters(const RunConfig& cfg, const LabelSet& labels,
                                    std::size_t raw_features) {
  auto p = PolicyParameters::random(PolicyShape::for_features(labels.size(), raw_features),
                                    derive_seed(cfg.seed, kInitStream), cfg.init_scale);
  p.set_temperature(cfg.temperature);
  return p;
}

TrainOutcome run_training(const RunConfig& cfg, const std::vector<AnnotatedVideo>& train,
                          const std::vector<AnnotatedVideo>& eval, const LabelSet& labels,
                          const std::optional<std::filesystem::path>& out_dir) {
  if (train.empty()) throw ScheduleError("training dataset is empty");
  if (eval.empty()) throw ScheduleError("evaluation dataset is empty");
  check_schedule(cfg.stages, cfg.ablation != "none");

  std::vector<TrainingView> views;
  views.reserve(train.size());
  for (const auto& v : train) views.emplace_back(v);

  std::ofstream stats, rewards;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    write_text(*out_dir / "config.json", to_json(cfg).dump(2) + "\n");
    stats.open(*out_dir / "stats.jsonl", std::ios::binary | std::ios::trunc);
    rewards.open(*out_dir / "rewards.jsonl", std::ios::binary | std::ios::trunc);
    if (!stats || !rewards) throw std::runtime_error("cannot open logs in " + out_dir->string());
  }

  ScheduleOptions opts;
  opts.threads = cfg.threads;
  opts.ablation = cfg.ablation != "none";
  opts.eval_set = &eval;
  opts.labels = &labels;
  if (out_dir) {
    opts.on_step = [&](const StepRecord& r) {
      stats << step_json(r).dump() << '\n';
      for (std::size_t i = 0; i < r.rewards.size(); ++i) {
        auto j = to_json(r.rewards[i]);
        rewards << j.dump() << '\n';
      }
    };
  }

  TrainOutcome out;
  out.schedule = run_schedule(views, cfg.stages, initial_parameters(cfg, labels, train.front().bins.features()),
                              cfg.seed, opts);
  const auto& sched = out.schedule;
  if (!sched.diverged) {
    if (!sched.stages.empty() && sched.stages.back().eval_gt) {
      out.eval_gt = *sched.stages.back().eval_gt;
      out.eval_ann = *sched.stages.back().eval_ann;
    } else {
      out.eval_gt = evaluate(sched.final_params, eval, labels, Reference::ground_truth,
                             DecodeMode::greedy, cfg.seed, cfg.threads);
      out.eval_ann = evaluate(sched.final_params, eval, labels, Reference::annotation,
                              DecodeMode::greedy, cfg.seed, cfg.threads);
    }
  }

  if (out_dir) {
    stats.flush();
    rewards.flush();
    // A diverged stage has no usable parameters; completed stages keep theirs.
    const std::size_t complete = sched.diverged ? sched.stages.size() - 1 : sched.stages.size();
    for (std::size_t k = 0; k < complete; ++k) {
      const auto& st = sched.stages[k];
      const std::string tag = "stage" + std::to_string(k + 1);
      write_checkpoint(*out_dir / (tag + ".ckpt"), st.params);
      if (st.eval_gt) write_text(*out_dir / (tag + "_eval_gt.json"), report_text(*st.eval_gt));
      if (st.eval_ann) write_text(*out_dir / (tag + "_eval_ann.json"), report_text(*st.eval_ann));
    }
    if (!sched.diverged) {
      write_text(*out_dir / "eval_gt.json", report_text(out.eval_gt));
      write_text(*out_dir / "eval_ann.json", report_text(out.eval_ann));
      write_text(*out_dir / "table.csv", to_csv(out.eval_gt));
    }
  }
  return out;
}

}  // namespace vgrl
