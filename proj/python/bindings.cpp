#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "vgrl/experiment.hpp"
#include "vgrl/grpo.hpp"

namespace py = pybind11;
using namespace vgrl;

namespace {

const LabelSet& L() { return LabelSet::defaults(); }

// Python sees JSON-shaped values; route them through the json module.
nlohmann::json to_cpp(const py::object& o) {
  const auto text = py::module_::import("json").attr("dumps")(o).cast<std::string>();
  return nlohmann::json::parse(text);
}

template <typename J>
py::object to_py(const J& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

SegmentSet segments(const py::list& items) {
  SegmentSet s;
  for (const auto& item : items) {
    const auto d = item.cast<py::dict>();
    const auto name = d["category"].cast<std::string>();
    const CategoryId c = L().find(name);
    if (c == L().size()) throw py::value_error("unknown category " + name);
    s.add(c, {d["start"].cast<double>(), d["end"].cast<double>()});
  }
  s.normalize();
  return s;
}

py::list segments_py(const SegmentSet& s) {
  py::list out;
  for (const auto& [c, ivs] : s.entries()) {
    for (const auto& iv : ivs) {
      py::dict d;
      d["category"] = L().name(c);
      d["start"] = iv.start;
      d["end"] = iv.end;
      out.append(d);
    }
  }
  return out;
}

std::vector<TimeInterval> intervals(const std::vector<std::pair<double, double>>& v) {
  std::vector<TimeInterval> out;
  for (auto [a, b] : v) out.push_back({a, b});
  return out;
}

WorldSpec world_from(const py::object& world) {
  return world.is_none() ? WorldSpec{} : world_spec_from_json(to_cpp(world));
}

std::vector<AnnotatedVideo> load_or_generate(const std::string& path, const WorldSpec& w) {
  return path.empty() ? generate_dataset(w) : read_dataset(path, L());
}

}  // namespace

PYBIND11_MODULE(_vgrl, m) {
  m.doc() = "Curriculum GRPO for temporal violation grounding on a synthetic video world";

  auto base = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IngestError>(m, "IngestError", PyExc_ValueError);
  py::register_exception<CorruptCheckpoint>(m, "CorruptCheckpoint", PyExc_ValueError);
  py::register_exception<ScheduleError>(m, "ScheduleError", PyExc_ValueError);
  py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InvalidInterval>(m, "InvalidInterval", PyExc_ValueError);
  py::register_exception<GroupTooSmall>(m, "GroupTooSmall", PyExc_ValueError);
  (void)base;

  m.def("labels", [] { return L().names(); }, "Default category names.");

  m.def("interval_iou", [](std::pair<double, double> a, std::pair<double, double> b) {
    return interval_iou({a.first, a.second}, {b.first, b.second});
  });
  m.def("union_iou", [](const std::vector<std::pair<double, double>>& pred,
                        const std::vector<std::pair<double, double>>& ann) {
    return union_iou(intervals(pred), intervals(ann));
  });

  m.def("render", [](const std::string& think, const py::list& predictions) {
    return render(ReasoningOutput{think, segments(predictions)}, L());
  }, py::arg("think"), py::arg("predictions"));
  m.def("parse", [](const std::string& text) {
    const auto out = parse(text, L());
    return py::make_tuple(out.think, segments_py(out.predictions));
  }, "Returns (think, predictions); raises ParseError.");
  m.def("validate", [](const std::string& text) {
    const auto v = validate(text, L());
    py::dict d;
    d["thinking_ok"] = v.thinking_ok;
    d["grounding_soft_ok"] = v.grounding_soft_ok;
    d["grounding_strict_ok"] = v.grounding_strict_ok;
    return d;
  });

  m.def("reward_iou", [](const py::list& pred, const py::list& ann, double threshold) {
    return reward_iou(segments(pred), segments(ann), threshold);
  }, py::arg("pred"), py::arg("ann"), py::arg("threshold") = 0.5);
  m.def("reward_boundary", [](const py::list& pred, const py::list& ann, double sigma, double duration) {
    return reward_boundary(segments(pred), segments(ann), sigma, duration);
  }, py::arg("pred"), py::arg("ann"), py::arg("sigma"), py::arg("duration"));
  m.def("reward_category", [](const py::list& pred, const py::list& ann) {
    return reward_category(segments(pred), segments(ann));
  });
  m.def("score_completion", [](const std::string& text, const py::list& annotation, double duration, int stage,
                               const std::string& grounding_mode) {
    AnnotatedVideo v;
    v.video_id = "py";
    v.duration = duration;
    v.bins = FeatureMatrix(1, 1);
    v.annotation = segments(annotation);
    v.ground_truth = v.annotation;
    auto cfg = RewardConfig::stage(stage);
    cfg.grounding_mode = grounding_mode_from_string(grounding_mode);
    return to_py(to_json(score_completion(text, TrainingView(v), cfg, L())));
  }, py::arg("text"), py::arg("annotation"), py::arg("duration"), py::arg("stage") = 3,
     py::arg("grounding_mode") = "strict");

  m.def("compute_advantages", [](const std::vector<double>& r, double floor) {
    return compute_advantages(r, floor);
  }, py::arg("rewards"), py::arg("std_floor") = 1e-8);
  m.def("kl_estimate", &kl_estimate, py::arg("logp_new"), py::arg("logp_ref"));

  m.def("generate_dataset", [](const py::object& world, const std::optional<std::filesystem::path>& out) {
    const auto w = world_from(world);
    const auto videos = generate_dataset(w);
    if (out) write_dataset(videos, w.labels, *out);
    py::list rows;
    for (const auto& v : videos) rows.append(py::module_::import("json").attr("loads")(dataset_line(v, w.labels)));
    return rows;
  }, py::arg("world") = py::none(), py::arg("out") = py::none(),
     "Videos as dicts in the JSONL schema; optionally also written to `out`.");

  m.def("default_config", [] { return to_py(to_json(RunConfig{})); });

  m.def("train", [](const py::object& config, const std::optional<std::filesystem::path>& out_dir) {
    const RunConfig cfg = config.is_none() ? RunConfig{} : run_config_from_json(to_cpp(config));
    const auto train = load_or_generate(cfg.data, cfg.world);
    const auto eval = cfg.eval_data.empty() ? train : read_dataset(cfg.eval_data, L());
    TrainOutcome out;
    {
      py::gil_scoped_release release;
      out = run_training(cfg, train, eval, L(), out_dir);
    }
    py::dict d;
    d["diverged"] = out.schedule.diverged;
    d["error"] = out.schedule.error;
    d["final_hash"] = out.schedule.final_params.hash();
    py::list stages;
    for (const auto& st : out.schedule.stages) {
      py::dict s;
      s["stage"] = st.config.stage_id;
      s["steps"] = st.steps.size();
      s["ref_hash"] = st.ref_hash;
      py::list rewards;
      for (const auto& r : st.steps) rewards.append(r.stats.mean_reward);
      s["mean_reward"] = rewards;
      stages.append(s);
    }
    d["stages"] = stages;
    if (!out.schedule.diverged) {
      d["eval_gt"] = to_py(to_json(out.eval_gt));
      d["eval_ann"] = to_py(to_json(out.eval_ann));
    }
    return d;
  }, py::arg("config") = py::none(), py::arg("out_dir") = py::none(),
     "Runs the configured schedule; `config` uses the config.json schema.");

  m.def("evaluate", [](const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                       const std::string& against, const std::string& decode, std::uint64_t seed,
                       std::size_t threads) {
    const auto params = read_checkpoint(checkpoint);
    const auto videos = read_dataset(data, L());
    EvalReport r;
    {
      py::gil_scoped_release release;
      r = evaluate(params, videos, L(), reference_from_string(against), decode_mode_from_string(decode), seed,
                   threads);
    }
    return to_py(to_json(r));
  }, py::arg("checkpoint"), py::arg("data"), py::arg("against") = "gt", py::arg("decode") = "greedy",
     py::arg("seed") = 1, py::arg("threads") = 1);

  m.def("checkpoint_hash", [](const std::filesystem::path& p) { return read_checkpoint(p).hash(); });
}
