#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "vgrl/experiment.hpp"

namespace fs = std::filesystem;
using namespace vgrl;

namespace {

enum Exit : int { kOk = 0, kUsage = 2, kData = 3, kDiverged = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path);
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config " + path + " is not valid JSON");
  return run_config_from_json(j);
}

// ---- gen-data ---------------------------------------------------------------

struct GenArgs {
  std::string config;
  std::string out;
  std::optional<std::size_t> videos;
  std::optional<std::uint64_t> seed;
  std::optional<double> coarse_fraction;
  std::optional<std::size_t> bins;
  std::optional<std::size_t> features;
  std::optional<std::size_t> max_segments;
  std::optional<double> precise_jitter;
  std::optional<double> coarse_jitter;
  std::optional<double> flip_prob;
  std::optional<double> snr;
};

void add_gen(CLI::App& app, GenArgs& a) {
  auto* c = app.add_subcommand("gen-data", "Generate a synthetic JSONL dataset");
  c->add_option("--out", a.out, "Output dataset path")->required();
  c->add_option("--config", a.config, "Run config whose \"world\" section is used as the base");
  c->add_option("--videos", a.videos, "Number of videos")->check(CLI::NonNegativeNumber);
  c->add_option("--seed", a.seed, "World seed");
  c->add_option("--coarse-fraction", a.coarse_fraction, "Probability of the coarse tier")
      ->check(CLI::Range(0.0, 1.0));
  c->add_option("--bins", a.bins, "Time bins per video")->check(CLI::PositiveNumber);
  c->add_option("--features", a.features, "Feature channels (0 = labels + 2)")->check(CLI::NonNegativeNumber);
  c->add_option("--max-segments", a.max_segments, "Maximum violation segments per video");
  c->add_option("--precise-jitter", a.precise_jitter, "Boundary jitter fraction, precise tier");
  c->add_option("--coarse-jitter", a.coarse_jitter, "Boundary jitter fraction, coarse tier");
  c->add_option("--flip-prob", a.flip_prob, "Category flip probability, coarse tier");
  c->add_option("--snr", a.snr, "Signature channel elevation");
}

int run_gen(const GenArgs& a) {
  WorldSpec w = a.config.empty() ? WorldSpec{} : load_config(a.config).world;
  if (a.videos) w.num_videos = *a.videos;
  if (a.seed) w.seed = *a.seed;
  if (a.coarse_fraction) w.coarse_fraction = *a.coarse_fraction;
  if (a.bins) w.bins = *a.bins;
  if (a.features) w.features = *a.features;
  if (a.max_segments) w.max_segments = *a.max_segments;
  if (a.precise_jitter) w.noise.precise_jitter_frac = *a.precise_jitter;
  if (a.coarse_jitter) w.noise.coarse_jitter_frac = *a.coarse_jitter;
  if (a.flip_prob) w.noise.category_flip_prob_coarse = *a.flip_prob;
  if (a.snr) w.feature_snr = *a.snr;
  try {
    w.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto videos = generate_dataset(w);
  write_dataset(videos, w.labels, a.out);

  std::size_t coarse = 0;
  std::vector<std::size_t> per_cat(w.labels.size(), 0);
  for (const auto& v : videos) {
    coarse += v.tier == Tier::coarse;
    for (CategoryId c : v.ground_truth.categories()) ++per_cat[c];
  }
  std::printf("wrote %zu videos to %s\n", videos.size(), a.out.c_str());
  std::printf("tier precise %zu coarse %zu\n", videos.size() - coarse, coarse);
  for (std::size_t c = 0; c < per_cat.size(); ++c) {
    std::printf("category %s %zu\n", w.labels.name(c).c_str(), per_cat[c]);
  }
  return kOk;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data;
  std::string eval_data;
  std::string out;
  std::string ablate = "none";
  std::optional<std::string> grounding_mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::vector<std::size_t> steps;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train", "Run the staged GRPO schedule");
  c->add_option("--out", a.out, "Run directory")->required();
  c->add_option("--config", a.config, "Run config JSON");
  c->add_option("--data", a.data, "Training dataset (JSONL); omitted = generate from the config world");
  c->add_option("--eval-data", a.eval_data, "Evaluation dataset; defaults to the training data");
  c->add_option("--ablate", a.ablate, "none | no-curriculum | no-boundary")
      ->check(CLI::IsMember({"none", "no-curriculum", "no-boundary"}));
  c->add_option("--grounding-mode", a.grounding_mode, "soft | strict")->check(CLI::IsMember({"soft", "strict"}));
  c->add_option("--seed", a.seed, "Run seed");
  c->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);
  c->add_option("--steps", a.steps, "Per-stage step counts, one value per stage")->delimiter(',');
}

int run_train(const TrainArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.threads) cfg.threads = *a.threads;
  if (!a.data.empty()) cfg.data = a.data;
  if (!a.eval_data.empty()) cfg.eval_data = a.eval_data;
  if (!a.steps.empty()) {
    if (a.steps.size() != cfg.stages.size()) {
      throw UsageError("--steps needs " + std::to_string(cfg.stages.size()) + " values");
    }
    for (std::size_t k = 0; k < a.steps.size(); ++k) cfg.stages[k].steps = a.steps[k];
  }
  if (a.ablate != "none") cfg.apply_ablation(a.ablate);
  if (a.grounding_mode) cfg.set_grounding_mode(grounding_mode_from_string(*a.grounding_mode));

  const LabelSet& labels = cfg.world.labels;
  const auto train = cfg.data.empty() ? generate_dataset(cfg.world) : read_dataset(cfg.data, labels);
  const auto eval = cfg.eval_data.empty() ? train : read_dataset(cfg.eval_data, labels);

  const auto out = run_training(cfg, train, eval, labels, fs::path(a.out));
  if (out.schedule.diverged) {
    std::fprintf(stderr, "numerical divergence: %s\n", out.schedule.error.c_str());
    return kDiverged;
  }
  std::printf("trained %zu steps; mIoU vs gt %.4f, vs ann %.4f; run directory %s\n", cfg.total_steps(),
              out.eval_gt.avg_miou, out.eval_ann.avg_miou, a.out.c_str());
  return kOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string run;
  std::string data;
  std::string against = "gt";
  std::string decode = "greedy";
  std::string out;
  std::string csv;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("eval", "Evaluate a checkpoint");
  auto* ck = c->add_option("--checkpoint", a.checkpoint, "Checkpoint file");
  auto* run = c->add_option("--run", a.run, "Run directory (final checkpoint, its config and data)");
  ck->excludes(run);
  c->add_option("--data", a.data, "Dataset to evaluate on");
  c->add_option("--against", a.against, "gt | ann")->check(CLI::IsMember({"gt", "ann"}));
  c->add_option("--decode", a.decode, "greedy | sampled")->check(CLI::IsMember({"greedy", "sampled"}));
  c->add_option("--out", a.out, "Report JSON path (default: stdout)");
  c->add_option("--csv", a.csv, "Table CSV path");
  c->add_option("--seed", a.seed, "Sampling seed (default: the config seed)");
  c->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);
}

int run_eval(const EvalArgs& a) {
  if (a.checkpoint.empty() == a.run.empty()) throw UsageError("give exactly one of --checkpoint or --run");
  RunConfig cfg;
  fs::path ckpt = a.checkpoint;
  if (!a.run.empty()) {
    cfg = load_config((fs::path(a.run) / "config.json").string());
    ckpt = fs::path(a.run) / ("stage" + std::to_string(cfg.stages.size()) + ".ckpt");
  }
  const auto params = read_checkpoint(ckpt);
  const LabelSet& labels = cfg.world.labels;

  std::vector<AnnotatedVideo> data;
  if (!a.data.empty()) {
    data = read_dataset(a.data, labels);
  } else if (!a.run.empty()) {
    const std::string& path = cfg.eval_data.empty() ? cfg.data : cfg.eval_data;
    data = path.empty() ? generate_dataset(cfg.world) : read_dataset(path, labels);
  } else {
    throw UsageError("--data is required with --checkpoint");
  }
  if (data.empty()) throw IngestError(0, "data", "dataset is empty");

  const auto report = evaluate(params, data, labels, reference_from_string(a.against),
                               decode_mode_from_string(a.decode), a.seed.value_or(cfg.seed),
                               a.threads.value_or(cfg.threads));
  const std::string text = report_text(report);
  if (a.out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    write_text(a.out, text);
  }
  if (!a.csv.empty()) write_text(a.csv, to_csv(report));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curriculum GRPO for temporal violation grounding on synthetic videos"};
  app.require_subcommand(1);
  GenArgs gen;
  TrainArgs train;
  EvalArgs ev;
  add_gen(app, gen);
  add_train(app, train);
  add_eval(app, ev);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (app.got_subcommand("gen-data")) return run_gen(gen);
    if (app.got_subcommand("train")) return run_train(train);
    return run_eval(ev);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsage;
  } catch (const CorruptCheckpoint& e) {
    std::fprintf(stderr, "CorruptCheckpoint: %s\n", e.what());
    return kData;
  } catch (const IngestError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const ScheduleError& e) {
    std::fprintf(stderr, "schedule error: %s\n", e.what());
    return kData;
  } catch (const GenerationError& e) {
    std::fprintf(stderr, "generation error: %s\n", e.what());
    return kData;
  } catch (const NumericalDivergence& e) {
    std::fprintf(stderr, "numerical divergence: %s\n", e.what());
    return kDiverged;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
