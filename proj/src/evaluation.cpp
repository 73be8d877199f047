#include "vgrl/evaluation.hpp"

#include <cstdio>

#include "vgrl/parallel.hpp"
#include "vgrl/structured_output.hpp"
#include "vgrl/synthetic_world.hpp"

namespace vgrl {

namespace {

void check_aligned(const std::vector<SegmentSet>& preds, const std::vector<SegmentSet>& refs) {
  if (preds.size() != refs.size()) {
    throw AlignmentError("prediction list has " + std::to_string(preds.size()) +
                         " entries, reference list has " + std::to_string(refs.size()));
  }
}

std::string fixed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

}  // namespace

std::string_view to_string(Reference r) {
  return r == Reference::ground_truth ? "ground_truth" : "annotation";
}

std::string_view to_string(DecodeMode d) { return d == DecodeMode::greedy ? "greedy" : "sampled"; }

Reference reference_from_string(std::string_view s) {
  if (s == "gt" || s == "ground_truth") return Reference::ground_truth;
  if (s == "ann" || s == "annotation") return Reference::annotation;
  throw std::invalid_argument("unknown reference: " + std::string(s));
}

DecodeMode decode_mode_from_string(std::string_view s) {
  if (s == "greedy") return DecodeMode::greedy;
  if (s == "sampled") return DecodeMode::sampled;
  throw std::invalid_argument("unknown decode mode: " + std::string(s));
}

std::vector<PrecisionRecall> category_pr(const std::vector<SegmentSet>& preds,
                                         const std::vector<SegmentSet>& refs,
                                         std::size_t num_categories) {
  check_aligned(preds, refs);
  std::vector<std::size_t> tp(num_categories), fp(num_categories), fn(num_categories);
  for (std::size_t v = 0; v < preds.size(); ++v) {
    for (CategoryId c = 0; c < num_categories; ++c) {
      const bool p = preds[v].contains(c);
      const bool r = refs[v].contains(c);
      tp[c] += p && r;
      fp[c] += p && !r;
      fn[c] += !p && r;
    }
  }
  std::vector<PrecisionRecall> out(num_categories);
  for (CategoryId c = 0; c < num_categories; ++c) {
    if (tp[c] + fp[c] > 0) out[c].precision = static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]);
    if (tp[c] + fn[c] > 0) out[c].recall = static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]);
  }
  return out;
}

GroundingScores grounding_miou(const std::vector<SegmentSet>& preds,
                               const std::vector<SegmentSet>& refs, std::size_t num_categories) {
  check_aligned(preds, refs);
  std::vector<double> sum(num_categories, 0.0);
  std::vector<std::size_t> count(num_categories, 0);
  for (std::size_t v = 0; v < refs.size(); ++v) {
    for (const auto& [c, ivs] : refs[v].entries()) {
      if (c >= num_categories) throw AlignmentError("reference category out of range");
      sum[c] += union_iou(preds[v].at(c), ivs);
      ++count[c];
    }
  }
  GroundingScores out;
  out.per_category.resize(num_categories);
  std::size_t n = 0;
  for (CategoryId c = 0; c < num_categories; ++c) {
    if (count[c] == 0) continue;
    out.per_category[c] = sum[c] / static_cast<double>(count[c]);
    out.average += *out.per_category[c];
    ++n;
  }
  if (n > 0) out.average /= static_cast<double>(n);
  return out;
}

EvalReport build_report(const std::vector<SegmentSet>& preds, const std::vector<SegmentSet>& refs,
                        const LabelSet& labels) {
  const auto pr = category_pr(preds, refs, labels.size());
  const auto gr = grounding_miou(preds, refs, labels.size());
  EvalReport r;
  r.num_videos = refs.size();
  std::size_t n = 0;
  for (CategoryId c = 0; c < labels.size(); ++c) {
    CategoryReport cr;
    cr.name = labels.name(c);
    cr.pr = pr[c];
    cr.miou = gr.per_category[c];
    cr.in_reference = cr.miou.has_value();
    if (cr.in_reference) {
      r.avg_precision += cr.pr.precision;
      r.avg_recall += cr.pr.recall;
      ++n;
    }
    r.categories.push_back(std::move(cr));
  }
  if (n > 0) {
    r.avg_precision /= static_cast<double>(n);
    r.avg_recall /= static_cast<double>(n);
  }
  r.avg_miou = gr.average;
  return r;
}

EvalReport evaluate(const PolicyParameters& params, const std::vector<AnnotatedVideo>& dataset,
                    const LabelSet& labels, Reference reference, DecodeMode decode,
                    std::uint64_t seed, std::size_t threads) {
  if (dataset.empty()) throw std::invalid_argument("evaluation dataset is empty");
  std::vector<SegmentSet> preds(dataset.size());
  std::vector<SegmentSet> refs(dataset.size());
  parallel_for(dataset.size(), threads, [&](std::size_t i) {
    const auto& v = dataset[i];
    const auto input = make_policy_input(v.bins, v.duration);
    const Completion out = decode == DecodeMode::greedy
                               ? greedy(params, input, labels)
                               : sample(params, input, labels, derive_seed(seed, i));
    try {
      preds[i] = parse(out.text, labels).predictions;
    } catch (const ParseError& e) {
      throw std::logic_error("policy produced unparseable output for " + v.video_id + ": " + e.what());
    }
    refs[i] = reference == Reference::ground_truth ? v.ground_truth : v.annotation;
  });
  EvalReport r = build_report(preds, refs, labels);
  r.reference = reference;
  r.decode = decode;
  r.seed = seed;
  return r;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["reference"] = std::string(to_string(r.reference));
  j["decode"] = std::string(to_string(r.decode));
  j["num_videos"] = r.num_videos;
  j["seed"] = r.seed;
  auto cats = nlohmann::ordered_json::array();
  for (const auto& c : r.categories) {
    nlohmann::ordered_json o;
    o["category"] = c.name;
    o["in_reference"] = c.in_reference;
    o["precision"] = c.pr.precision;
    o["recall"] = c.pr.recall;
    o["miou"] = c.miou ? nlohmann::ordered_json(*c.miou) : nlohmann::ordered_json(nullptr);
    cats.push_back(std::move(o));
  }
  j["categories"] = std::move(cats);
  nlohmann::ordered_json avg;
  avg["precision"] = r.avg_precision;
  avg["recall"] = r.avg_recall;
  avg["miou"] = r.avg_miou;
  j["average"] = std::move(avg);
  return j;
}

std::string to_csv(const EvalReport& r) {
  std::string head = "metric";
  std::string pr_row = "Cate.(P/R)";
  std::string gro_row = "Gro.";
  for (const auto& c : r.categories) {
    head += "," + c.name;
    pr_row += "," + fixed3(c.pr.precision) + "/" + fixed3(c.pr.recall);
    gro_row += "," + (c.miou ? fixed3(*c.miou) : std::string("-"));
  }
  head += ",Average";
  pr_row += "," + fixed3(r.avg_precision) + "/" + fixed3(r.avg_recall);
  gro_row += "," + fixed3(r.avg_miou);
  return head + "\n" + pr_row + "\n" + gro_row + "\n";
}

}  // namespace vgrl
