#include "acrst/simloop.hpp"

#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "acrst/error.hpp"
#include "acrst/filter.hpp"
#include "acrst/metrics.hpp"
#include "acrst/rebalance.hpp"

namespace acrst {
namespace {

// Objectness and class probability charged for a target the student missed.
constexpr double kMissedObjectness = 0.1;

std::string stream(int epoch, int step, const char* what, std::size_t j) {
  return "epoch/" + std::to_string(epoch) + "/step/" + std::to_string(step) + "/" + what + "/" +
         std::to_string(j);
}

std::string pass_stream(const std::string& tag, const char* what, ImageId id) {
  return tag + "/pass/" + what + "/" + std::to_string(id);
}

std::vector<std::size_t> sample_batch(std::size_t pool, int size, Rng& rng) {
  std::vector<std::size_t> idx;
  if (pool == 0) return idx;
  idx.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) idx.push_back(uniform_index(rng, pool));
  return idx;
}

// A label is clean when most of its box shows an object of that class.
bool label_is_clean(const BBox& box, int class_id, const ImageRecord& truth) {
  const double area = box.area();
  if (!(area > 0.0)) return false;
  for (const auto& gt : truth.ground_truth) {
    if (gt.class_id == class_id && intersection_area(box, gt.bbox) >= 0.5 * area) return true;
  }
  return false;
}

FilterConfig effective_filter(const ExperimentConfig& cfg) {
  FilterConfig f = cfg.filter;
  if (!cfg.toggles.two_stage) f.mode = FilterMode::one_stage;
  return f;
}

void append_pairs(std::span<const Prediction> preds, std::span<const Instance> targets,
                  const std::vector<bool>& pasted, int num_classes, std::vector<TrainingPair>& out) {
  const MatchResult m = match_greedy(preds, targets, 0.5, false);
  const double k = static_cast<double>(num_classes);
  for (const auto& pair : m.pairs) {
    const Prediction& p = preds[pair.pred];
    const Instance& t = targets[pair.gt];
    TrainingPair tp;
    tp.foreground = true;
    tp.objectness = p.score;
    tp.true_class_prob = p.class_id == t.class_id ? p.score : (1.0 - p.score) / k;
    tp.box_delta = box_delta(p.bbox, t.bbox);
    tp.pasted = pasted[pair.gt];
    out.push_back(tp);
  }
  for (std::size_t gi : m.unmatched_gts) {
    TrainingPair tp;
    tp.foreground = true;
    tp.objectness = kMissedObjectness;
    tp.true_class_prob = 1.0 / (k + 1.0);
    tp.pasted = pasted[gi];
    out.push_back(tp);
  }
  for (std::size_t pi : m.unmatched_preds) {
    TrainingPair tp;
    tp.foreground = false;
    tp.objectness = preds[pi].score;
    tp.true_class_prob = 1.0 - preds[pi].score;
    out.push_back(tp);
  }
}

void accumulate(LossBreakdown& acc, const LossBreakdown& l, double w) {
  acc.rpn_cls += w * l.rpn_cls;
  acc.rpn_reg += w * l.rpn_reg;
  acc.roi_cls += w * l.roi_cls;
  acc.roi_reg += w * l.roi_reg;
  acc.total += w * l.total;
}

struct PassResult {
  PseudoLabelMap labels;
  QualityCounts quality;
  std::vector<std::int64_t> pseudo_counts;
  std::vector<EvalImage> eval;
};

// Teacher pseudo-labels every unlabeled image; feeds both the bank refresh
// and the epoch metrics.
PassResult pseudo_label_pass(const LoopState& st, const ExperimentConfig& cfg, const std::string& tag) {
  const int num_classes = st.unlabeled_truth.num_classes();
  const FilterConfig fcfg = effective_filter(cfg);
  PassResult r;
  r.pseudo_counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (const auto& rec : st.unlabeled_truth.images) {
    Rng det_rng = make_rng(cfg.seed, pass_stream(tag, "detect", rec.id));
    Rng ora_rng = make_rng(cfg.seed, pass_stream(tag, "oracle", rec.id));
    auto preds = synth_detect(st.teacher, rec, det_rng);
    const auto v = oracle_image_labels(rec, num_classes, cfg.oracle, ora_rng, fcfg.tau_ml);
    auto kept = apply_filter(preds, v, fcfg);
    r.quality.add(kept, rec.ground_truth, cfg.eval.iou_thr);
    for (const auto& p : kept) ++r.pseudo_counts[p.class_id - 1];
    r.labels[rec.id] = kept;
    r.eval.push_back(EvalImage{std::move(preds), rec.ground_truth});
  }
  return r;
}

}  // namespace

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (!cfg.dataset.coco_path) return make_synthetic_dataset(cfg.dataset.synthetic);
  std::ifstream in(*cfg.dataset.coco_path, std::ios::binary);
  if (!in) throw ConfigError("dataset.coco_path", "cannot open " + *cfg.dataset.coco_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_coco_annotations(buf.str());
}

DetectorParams pretrain(const ExperimentConfig& cfg, const Dataset& labeled, std::uint64_t seed) {
  if (labeled.num_labeled() == 0) throw ConfigError("split_fraction", "the labeled split is empty");
  const int num_classes = labeled.num_classes();
  DetectorParams student = initial_params(cfg.detector, num_classes);

  // The detector's class prior mirrors labeled frequencies (add-one smoothed).
  const auto counts = class_counts(labeled, true);
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0) + num_classes;
  for (int k = 0; k < num_classes; ++k) {
    student.class_prior[k] = (static_cast<double>(counts[k]) + 1.0) / total;
  }

  const UpdateRule rule = update_rule(cfg.detector);
  for (int e = 0; e < cfg.pretrain_epochs; ++e) {
    for (int s = 0; s < cfg.steps_per_epoch; ++s) {
      Rng rng = make_rng(seed, "pretrain/" + std::to_string(e) + "/" + std::to_string(s));
      BatchSignal sig;
      sig.class_exposure.assign(static_cast<std::size_t>(num_classes), 0);
      for (std::size_t i : sample_batch(labeled.images.size(), cfg.batch_labeled, rng)) {
        for (const auto& inst : labeled.images[i].ground_truth) {
          ++sig.class_exposure[inst.class_id - 1];
          ++sig.reg_targets;
          ++sig.total_instances;
        }
      }
      student = student_update(student, sig, rule);
    }
  }
  return student;
}

LoopState init_loop(const ExperimentConfig& cfg, const Dataset& dataset) {
  auto [labeled, unlabeled] = split_standard(dataset, cfg.split_fraction, derive_seed(cfg.seed, "split"));
  if (labeled.images.empty()) throw ConfigError("split_fraction", "the labeled split is empty");
  if (unlabeled.images.empty()) throw ConfigError("split_fraction", "the unlabeled split is empty");

  LoopState st;
  st.student = pretrain(cfg, labeled, cfg.seed);
  st.teacher = st.student;
  st.bank = build_labeled_bank(labeled);
  st.unlabeled_view = unlabeled.training_view();
  st.labeled = std::move(labeled);
  st.unlabeled_truth = std::move(unlabeled);

  const PassResult init = pseudo_label_pass(st, cfg, "init");
  st.bank.refresh_pseudo(init.labels, cfg.refresh_period, 0);
  return st;
}

EpochTrace run_epoch(LoopState& st, const ExperimentConfig& cfg) {
  const int epoch = cfg.pretrain_epochs + st.mutual_epoch;
  const int num_classes = st.labeled.num_classes();
  const auto k_size = static_cast<std::size_t>(num_classes);
  const FilterConfig fcfg = effective_filter(cfg);
  const UpdateRule rule = update_rule(cfg.detector);
  const bool mixing = (cfg.toggles.fbr || cfg.toggles.affr) && cfg.paste.crops_per_image > 0;
  const bool selective = cfg.toggles.selective_supervision;

  std::map<ImageId, const ImageRecord*> truth_of;
  for (const auto& rec : st.unlabeled_truth.images) truth_of[rec.id] = &rec;
  for (const auto& rec : st.labeled.images) truth_of[rec.id] = &rec;

  EpochTrace trace;
  trace.epoch = epoch;
  trace.exposure.assign(k_size, 0);

  // Class statistics come from the pseudo bank, which covers every unlabeled image.
  const ClassStats stats{st.bank.pseudo_class_counts(), class_counts(st.labeled, true),
                         static_cast<double>(st.unlabeled_view.size()) /
                             static_cast<double>(st.labeled.size())};
  trace.pseudo_recall = pseudo_recall(stats);
  const SamplingDistribution mu = cfg.toggles.affr
                                      ? affr_distribution(trace.pseudo_recall, cfg.paste.beta)
                                      : SamplingDistribution::uniform(num_classes);
  trace.mu = mu.mu;

  const double step_weight = 1.0 / cfg.steps_per_epoch;
  for (int s = 0; s < cfg.steps_per_epoch; ++s) {
    Rng batch_rng = make_rng(cfg.seed, stream(epoch, s, "batch", 0));
    const auto lab_idx = sample_batch(st.labeled.size(), cfg.batch_labeled, batch_rng);
    const auto unl_idx = sample_batch(st.unlabeled_view.size(), cfg.batch_unlabeled, batch_rng);

    BatchSignal sig;
    sig.class_exposure.assign(k_size, 0);
    std::vector<TrainingPair> sup_pairs;
    std::vector<TrainingPair> unsup_pairs;

    for (std::size_t j = 0; j < lab_idx.size(); ++j) {
      const ImageRecord& rec = st.labeled.images[lab_idx[j]];
      for (const auto& inst : rec.ground_truth) {
        ++sig.class_exposure[inst.class_id - 1];
        ++sig.reg_targets;
        ++sig.total_instances;
      }
      Rng rng = make_rng(cfg.seed, stream(epoch, s, "student-sup", j));
      const auto preds = synth_detect(st.student, rec, rng);
      append_pairs(preds, rec.ground_truth, std::vector<bool>(rec.ground_truth.size(), false),
                   num_classes, sup_pairs);
    }

    TargetAssignment targets_total;
    for (std::size_t j = 0; j < unl_idx.size(); ++j) {
      const ImageRecord& view = st.unlabeled_view.images[unl_idx[j]];
      const ImageRecord& truth = *truth_of.at(view.id);

      // (1)-(2) weak view is the identity; teacher predicts, filter keeps pseudo-labels
      Rng det_rng = make_rng(cfg.seed, stream(epoch, s, "detect", j));
      Rng ora_rng = make_rng(cfg.seed, stream(epoch, s, "oracle", j));
      const auto preds = synth_detect(st.teacher, truth, det_rng);
      const auto v = oracle_image_labels(truth, num_classes, cfg.oracle, ora_rng, fcfg.tau_ml);
      const auto pseudo = apply_filter(preds, v, fcfg);

      ImageRecord base{view.id, view.width, view.height, {}};
      for (const auto& p : pseudo) base.ground_truth.push_back(to_instance(p, view.id));

      // (3)-(4) rebalance by pasting bank crops
      MixedRecord mixed;
      std::vector<CropEntry> crops;
      if (mixing) {
        Rng crop_rng = make_rng(cfg.seed, stream(epoch, s, "crops", j));
        try {
          crops = st.bank.sample(mu, static_cast<std::size_t>(cfg.paste.crops_per_image), crop_rng);
        } catch (const EmptyBankError&) {
          crops.clear();
        }
      }
      Rng paste_rng = make_rng(cfg.seed, stream(epoch, s, "paste", j));
      mixed = fbr_mix(base, crops, paste_rng, cfg.paste);
      trace.crops_attempted += static_cast<std::int64_t>(crops.size());
      trace.crops_placed += static_cast<std::int64_t>(mixed.placements.size());

      const auto assigned = cfg.eval.proposals.assign(mixed.merged_annotations.size());
      targets_total.foreground += assigned.foreground;
      targets_total.background += assigned.background;

      // Label-noise accounting against hidden truth (the simulated world's view).
      ImageRecord target_rec{view.id, view.width, view.height, {}};
      std::vector<bool> pasted_flags;
      std::size_t placement = 0;
      for (const auto& m : mixed.merged_annotations) {
        bool clean;
        if (m.pasted) {
          const CropEntry& crop = mixed.placements.at(placement++).crop;
          clean = crop.origin == CropOrigin::labeled ||
                  label_is_clean(crop.bbox, crop.class_id, *truth_of.at(crop.source_image_id));
          if (selective) ++sig.reg_targets;
        } else {
          clean = label_is_clean(m.instance.bbox, m.instance.class_id, truth);
        }
        if (clean) {
          ++sig.class_exposure[m.instance.class_id - 1];
        } else {
          ++sig.noisy_targets;
        }
        ++sig.total_instances;
        target_rec.ground_truth.push_back(m.instance);
        pasted_flags.push_back(m.pasted);
      }

      Rng stu_rng = make_rng(cfg.seed, stream(epoch, s, "student-unsup", j));
      const auto student_preds = synth_detect(st.student, target_rec, stu_rng);
      append_pairs(student_preds, target_rec.ground_truth, pasted_flags, num_classes, unsup_pairs);
    }

    // (5) losses
    const LossBreakdown l_sup = loss_breakdown(sup_pairs, LossMode::supervised);
    const LossBreakdown l_unsup = loss_breakdown(
        unsup_pairs, selective ? LossMode::unsup_selective : LossMode::unsup_cls_only);
    accumulate(trace.loss_sup, l_sup, step_weight);
    accumulate(trace.loss_unsup, l_unsup, step_weight);
    trace.loss_total += step_weight * (l_sup.total + cfg.lambda_unsup * l_unsup.total);
    if (targets_total.foreground + targets_total.background > 0) {
      trace.fg_ratio += step_weight * fg_ratio(targets_total);
    }

    // (6)-(7) student step, teacher EMA
    for (std::size_t k = 0; k < k_size; ++k) trace.exposure[k] += sig.class_exposure[k];
    st.student = student_update(st.student, sig, rule);
    st.teacher = ema_update(st.teacher, st.student, cfg.detector.ema_alpha);
  }

  // (8)-(9) refresh the pseudo bank from a full teacher pass and record metrics
  ++st.mutual_epoch;
  const PassResult pass = pseudo_label_pass(st, cfg, "epoch/" + std::to_string(epoch));
  st.bank.refresh_pseudo(pass.labels, cfg.refresh_period, st.mutual_epoch);

  const auto q = pass.quality.quality();
  trace.pseudo_acc = q.accuracy;
  trace.pseudo_rec = q.recall;
  trace.box_miou = pass.quality.mean_iou();
  trace.box_miou_valid = pass.quality.matched_preds > 0;
  const auto truth_counts = class_counts(st.unlabeled_truth, false);
  if (std::accumulate(truth_counts.begin(), truth_counts.end(), std::int64_t{0}) > 0) {
    trace.kld = class_kld(pass.pseudo_counts, truth_counts, cfg.eval.kld_epsilon);
  }
  trace.ap50 = average_precision(pass.eval, 0.5);
  trace.ap5095 = average_precision_50_95(pass.eval);
  trace.n_pseudo = static_cast<std::int64_t>(st.bank.pseudo_size());
  return trace;
}

RunReport run_experiment(const ExperimentConfig& cfg, const Dataset& dataset) {
  validate(cfg);
  RunReport report;
  report.seed = cfg.seed;
  report.config_json = config_to_json(cfg);
  for (const auto& c : dataset.categories) report.class_names.push_back(c.name);

  LoopState st = init_loop(cfg, dataset);
  for (int e = cfg.pretrain_epochs; e < cfg.epochs; ++e) {
    report.epochs.push_back(run_epoch(st, cfg));
  }
  report.final_teacher = st.teacher;
  return report;
}

}  // namespace acrst
