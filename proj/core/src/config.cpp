#include "acrst/config.hpp"

#include <algorithm>
#include <exception>
#include <set>

#include "acrst/error.hpp"
#include "json.hpp"

namespace acrst {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool set_toggle(Toggles& toggles, std::string_view name, bool value) {
  if (name == "fbr") toggles.fbr = value;
  else if (name == "affr") toggles.affr = value;
  else if (name == "two_stage") toggles.two_stage = value;
  else if (name == "selective_supervision") toggles.selective_supervision = value;
  else return false;
  return true;
}

namespace {

// Reads keys of one JSON object, remembering the path for error messages and
// rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(name(key), "unknown key");
    }
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    const json* v = find(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError(name(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw ConfigError(name(key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v->is_number_integer() && !v->is_number_unsigned()) {
            throw ConfigError(name(key), "expected a non-negative integer");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw ConfigError(name(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw ConfigError(name(key), "expected a string");
      }
      out = v->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(name(key), e.what());
    }
  }

  Section child(const std::string& key) {
    const json* v = find(key);
    static const json empty = json::object();
    return Section(v ? *v : empty, name(key));
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_toggles(Section s, Toggles& t) {
  s.read("fbr", t.fbr);
  s.read("affr", t.affr);
  s.read("two_stage", t.two_stage);
  s.read("selective_supervision", t.selective_supervision);
}

ordered_json toggles_json(const Toggles& t) {
  return {{"fbr", t.fbr},
          {"affr", t.affr},
          {"two_stage", t.two_stage},
          {"selective_supervision", t.selective_supervision}};
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("", "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }

  ExperimentConfig cfg;
  {
    Section root(doc, "");
    root.read("seed", cfg.seed);
    root.read("split_fraction", cfg.split_fraction);
    root.read("epochs", cfg.epochs);
    root.read("pretrain_epochs", cfg.pretrain_epochs);
    root.read("steps_per_epoch", cfg.steps_per_epoch);
    root.read("batch_labeled", cfg.batch_labeled);
    root.read("batch_unlabeled", cfg.batch_unlabeled);
    root.read("lambda_unsup", cfg.lambda_unsup);
    root.read("refresh_period", cfg.refresh_period);
    {
      Section ds = root.child("dataset");
      std::string path;
      if (ds.has("coco_path")) {
        ds.read("coco_path", path);
        cfg.dataset.coco_path = path;
      } else {
        ds.find("coco_path");
      }
      Section syn = ds.child("synthetic");
      auto& sc = cfg.dataset.synthetic;
      syn.read("num_images", sc.num_images);
      syn.read("num_classes", sc.num_classes);
      syn.read("width", sc.width);
      syn.read("height", sc.height);
      syn.read("min_instances", sc.min_instances);
      syn.read("max_instances", sc.max_instances);
      syn.read("zipf_exponent", sc.zipf_exponent);
      syn.read("min_box_fraction", sc.min_box_fraction);
      syn.read("max_box_fraction", sc.max_box_fraction);
      syn.read("seed", sc.seed);
    }
    {
      Section p = root.child("paste");
      p.read("crops_per_image", cfg.paste.crops_per_image);
      p.read("rescale_min", cfg.paste.rescale_min);
      p.read("rescale_max", cfg.paste.rescale_max);
      p.read("occlusion_threshold", cfg.paste.occlusion_threshold);
      p.read("beta", cfg.paste.beta);
    }
    {
      Section f = root.child("filter");
      f.read("tau_cls", cfg.filter.tau_cls);
      f.read("tau_ml", cfg.filter.tau_ml);
      std::string mode = to_string(cfg.filter.mode);
      f.read("mode", mode);
      try {
        cfg.filter.mode = filter_mode_from_string(mode);
      } catch (const ArgumentError& e) {
        throw ConfigError("filter.mode", e.what());
      }
    }
    {
      Section d = root.child("detector");
      auto& dc = cfg.detector;
      if (const json* skill = d.find("initial_recall_skill")) {
        if (skill->is_number()) {
          dc.initial_recall_skill = {skill->get<double>()};
        } else if (skill->is_array() && std::all_of(skill->begin(), skill->end(),
                                                    [](const json& v) { return v.is_number(); })) {
          dc.initial_recall_skill = skill->get<std::vector<double>>();
        } else {
          throw ConfigError("detector.initial_recall_skill", "expected a number or a list of numbers");
        }
      }
      d.read("confusion_rate", dc.confusion_rate);
      d.read("loc_skill", dc.loc_skill);
      d.read("partial_rate", dc.partial_rate);
      d.read("fp_rate", dc.fp_rate);
      d.read("confidence_sharpness", dc.confidence_sharpness);
      d.read("lr", dc.lr);
      d.read("ema_alpha", dc.ema_alpha);
      d.read("confusion_floor", dc.confusion_floor);
      d.read("partial_floor", dc.partial_floor);
      d.read("noise_gain", dc.noise_gain);
    }
    {
      Section o = root.child("oracle");
      o.read("fn_rate", cfg.oracle.fn_rate);
      o.read("fp_rate", cfg.oracle.fp_rate);
    }
    read_toggles(root.child("toggles"), cfg.toggles);
    {
      Section e = root.child("eval");
      e.read("iou_thr", cfg.eval.iou_thr);
      e.read("kld_epsilon", cfg.eval.kld_epsilon);
      e.read("proposal_budget", cfg.eval.proposals.budget);
      e.read("proposals_per_instance", cfg.eval.proposals.proposals_per_instance);
    }
    if (root.has("sweep")) {
      Section sw = root.child("sweep");
      SweepConfig sweep;
      if (const json* runs = sw.find("runs")) {
        if (!runs->is_array()) throw ConfigError("sweep.runs", "expected a list");
        for (std::size_t i = 0; i < runs->size(); ++i) {
          const std::string path = "sweep.runs[" + std::to_string(i) + "]";
          Section r((*runs)[i], path);
          SweepRun run{"run_" + std::to_string(i), cfg.toggles};
          r.read("name", run.name);
          if (run.name.empty() || run.name.find_first_of("/\\") != std::string::npos) {
            throw ConfigError(path + ".name", "must be a non-empty name without path separators");
          }
          read_toggles(r.child("toggles"), run.toggles);
          sweep.runs.push_back(std::move(run));
        }
      }
      sw.read("seeds", sweep.seeds);
      cfg.sweep = std::move(sweep);
    } else {
      root.find("sweep");
    }
  }
  validate(cfg);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0)) {
    throw ConfigError("split_fraction", "must lie in (0,1)");
  }
  if (cfg.pretrain_epochs < 0) throw ConfigError("pretrain_epochs", "must be non-negative");
  if (cfg.epochs < cfg.pretrain_epochs) throw ConfigError("epochs", "must be >= pretrain_epochs");
  if (cfg.steps_per_epoch < 1) throw ConfigError("steps_per_epoch", "must be positive");
  if (cfg.batch_labeled < 1) throw ConfigError("batch_labeled", "must be positive");
  if (cfg.batch_unlabeled < 1) throw ConfigError("batch_unlabeled", "must be positive");
  if (!(cfg.lambda_unsup >= 0.0)) throw ConfigError("lambda_unsup", "must be non-negative");
  if (cfg.refresh_period < 1) throw ConfigError("refresh_period", "must be positive");

  const auto& sc = cfg.dataset.synthetic;
  if (sc.num_images < 1) throw ConfigError("dataset.synthetic.num_images", "must be positive");
  if (sc.num_classes < 1) throw ConfigError("dataset.synthetic.num_classes", "must be positive");
  if (!(sc.width > 0.0)) throw ConfigError("dataset.synthetic.width", "must be positive");
  if (!(sc.height > 0.0)) throw ConfigError("dataset.synthetic.height", "must be positive");
  if (sc.min_instances < 0) throw ConfigError("dataset.synthetic.min_instances", "must be non-negative");
  if (sc.max_instances < sc.min_instances) {
    throw ConfigError("dataset.synthetic.max_instances", "must be >= min_instances");
  }
  if (!(sc.min_box_fraction > 0.0)) throw ConfigError("dataset.synthetic.min_box_fraction", "must be positive");
  if (!(sc.max_box_fraction >= sc.min_box_fraction && sc.max_box_fraction <= 1.0)) {
    throw ConfigError("dataset.synthetic.max_box_fraction", "must lie in [min_box_fraction, 1]");
  }

  if (cfg.paste.crops_per_image < 0) throw ConfigError("paste.crops_per_image", "must be non-negative");
  if (!(cfg.paste.rescale_min > 0.0)) throw ConfigError("paste.rescale_min", "must be positive");
  if (!(cfg.paste.rescale_max >= cfg.paste.rescale_min)) {
    throw ConfigError("paste.rescale_max", "must be >= rescale_min");
  }
  if (!unit(cfg.paste.occlusion_threshold)) throw ConfigError("paste.occlusion_threshold", "must lie in [0,1]");
  if (!(cfg.paste.beta >= 0.0)) throw ConfigError("paste.beta", "must be non-negative");

  if (!unit(cfg.filter.tau_cls)) throw ConfigError("filter.tau_cls", "must lie in [0,1]");
  if (!unit(cfg.filter.tau_ml)) throw ConfigError("filter.tau_ml", "must lie in [0,1]");

  const auto& d = cfg.detector;
  if (d.initial_recall_skill.empty() ||
      !std::all_of(d.initial_recall_skill.begin(), d.initial_recall_skill.end(), unit)) {
    throw ConfigError("detector.initial_recall_skill", "values must lie in [0,1]");
  }
  if (!cfg.dataset.coco_path && d.initial_recall_skill.size() != 1 &&
      d.initial_recall_skill.size() != static_cast<std::size_t>(sc.num_classes)) {
    throw ConfigError("detector.initial_recall_skill", "needs one value or one per class");
  }
  if (!unit(d.confusion_rate)) throw ConfigError("detector.confusion_rate", "must lie in [0,1]");
  if (!unit(d.loc_skill)) throw ConfigError("detector.loc_skill", "must lie in [0,1]");
  if (!unit(d.partial_rate)) throw ConfigError("detector.partial_rate", "must lie in [0,1]");
  if (!(d.fp_rate >= 0.0)) throw ConfigError("detector.fp_rate", "must be non-negative");
  if (!(d.confidence_sharpness > 0.0)) throw ConfigError("detector.confidence_sharpness", "must be positive");
  if (!(d.lr > 0.0 && d.lr <= 1.0)) throw ConfigError("detector.lr", "must lie in (0,1]");
  if (!unit(d.ema_alpha)) throw ConfigError("detector.ema_alpha", "must lie in [0,1]");
  if (!unit(d.confusion_floor)) throw ConfigError("detector.confusion_floor", "must lie in [0,1]");
  if (!unit(d.partial_floor)) throw ConfigError("detector.partial_floor", "must lie in [0,1]");
  if (!(d.noise_gain >= 0.0)) throw ConfigError("detector.noise_gain", "must be non-negative");

  if (!unit(cfg.oracle.fn_rate)) throw ConfigError("oracle.fn_rate", "must lie in [0,1]");
  if (!unit(cfg.oracle.fp_rate)) throw ConfigError("oracle.fp_rate", "must lie in [0,1]");

  if (!(cfg.eval.iou_thr > 0.0 && cfg.eval.iou_thr <= 1.0)) throw ConfigError("eval.iou_thr", "must lie in (0,1]");
  if (!(cfg.eval.kld_epsilon > 0.0)) throw ConfigError("eval.kld_epsilon", "must be positive");
  if (cfg.eval.proposals.budget < 1) throw ConfigError("eval.proposal_budget", "must be positive");
  if (cfg.eval.proposals.proposals_per_instance < 0) {
    throw ConfigError("eval.proposals_per_instance", "must be non-negative");
  }
  if (cfg.sweep && cfg.sweep->runs.empty() && cfg.sweep->seeds.empty()) {
    throw ConfigError("sweep", "needs at least one run or seed");
  }
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const auto& sc = cfg.dataset.synthetic;
  const auto& d = cfg.detector;
  ordered_json dataset = {{"synthetic",
                           {{"num_images", sc.num_images},
                            {"num_classes", sc.num_classes},
                            {"width", sc.width},
                            {"height", sc.height},
                            {"min_instances", sc.min_instances},
                            {"max_instances", sc.max_instances},
                            {"zipf_exponent", sc.zipf_exponent},
                            {"min_box_fraction", sc.min_box_fraction},
                            {"max_box_fraction", sc.max_box_fraction},
                            {"seed", sc.seed}}}};
  if (cfg.dataset.coco_path) dataset["coco_path"] = *cfg.dataset.coco_path;

  ordered_json doc = {
      {"seed", cfg.seed},
      {"dataset", dataset},
      {"split_fraction", cfg.split_fraction},
      {"epochs", cfg.epochs},
      {"pretrain_epochs", cfg.pretrain_epochs},
      {"steps_per_epoch", cfg.steps_per_epoch},
      {"batch_labeled", cfg.batch_labeled},
      {"batch_unlabeled", cfg.batch_unlabeled},
      {"lambda_unsup", cfg.lambda_unsup},
      {"refresh_period", cfg.refresh_period},
      {"paste",
       {{"crops_per_image", cfg.paste.crops_per_image},
        {"rescale_min", cfg.paste.rescale_min},
        {"rescale_max", cfg.paste.rescale_max},
        {"occlusion_threshold", cfg.paste.occlusion_threshold},
        {"beta", cfg.paste.beta}}},
      {"filter",
       {{"tau_cls", cfg.filter.tau_cls}, {"tau_ml", cfg.filter.tau_ml}, {"mode", to_string(cfg.filter.mode)}}},
      {"detector",
       {{"initial_recall_skill", d.initial_recall_skill},
        {"confusion_rate", d.confusion_rate},
        {"loc_skill", d.loc_skill},
        {"partial_rate", d.partial_rate},
        {"fp_rate", d.fp_rate},
        {"confidence_sharpness", d.confidence_sharpness},
        {"lr", d.lr},
        {"ema_alpha", d.ema_alpha},
        {"confusion_floor", d.confusion_floor},
        {"partial_floor", d.partial_floor},
        {"noise_gain", d.noise_gain}}},
      {"oracle", {{"fn_rate", cfg.oracle.fn_rate}, {"fp_rate", cfg.oracle.fp_rate}}},
      {"toggles", toggles_json(cfg.toggles)},
      {"eval",
       {{"iou_thr", cfg.eval.iou_thr},
        {"kld_epsilon", cfg.eval.kld_epsilon},
        {"proposal_budget", cfg.eval.proposals.budget},
        {"proposals_per_instance", cfg.eval.proposals.proposals_per_instance}}},
  };
  if (cfg.sweep) {
    ordered_json runs = ordered_json::array();
    for (const auto& r : cfg.sweep->runs) {
      runs.push_back({{"name", r.name}, {"toggles", toggles_json(r.toggles)}});
    }
    doc["sweep"] = {{"runs", runs}, {"seeds", cfg.sweep->seeds}};
  }
  return doc.dump(2);
}

DetectorParams initial_params(const DetectorConfig& cfg, int num_classes) {
  DetectorParams p;
  const auto k = static_cast<std::size_t>(num_classes);
  if (cfg.initial_recall_skill.size() == 1) {
    p.recall_skill.assign(k, cfg.initial_recall_skill.front());
  } else if (cfg.initial_recall_skill.size() == k) {
    p.recall_skill = cfg.initial_recall_skill;
  } else {
    throw ConfigError("detector.initial_recall_skill", "needs one value or one per class");
  }
  p.confusion_rate = cfg.confusion_rate;
  p.loc_skill = cfg.loc_skill;
  p.partial_rate = cfg.partial_rate;
  p.fp_rate = cfg.fp_rate;
  p.confidence_sharpness = cfg.confidence_sharpness;
  p.class_prior.assign(k, 1.0 / static_cast<double>(k));
  return p;
}

UpdateRule update_rule(const DetectorConfig& cfg) {
  return UpdateRule{cfg.lr, cfg.confusion_floor, cfg.partial_floor, cfg.noise_gain};
}

}  // namespace acrst
