#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acrst/config.hpp"
#include "acrst/cropbank.hpp"
#include "acrst/dataset.hpp"
#include "acrst/model.hpp"

namespace acrst {

/// Metrics of one mutual-learning epoch.
struct EpochTrace {
  int epoch = 0;
  LossBreakdown loss_sup;
  LossBreakdown loss_unsup;
  double loss_total = 0.0;   // L_sup + lambda_unsup * L_unsup, averaged over steps
  double fg_ratio = 0.0;     // unlabeled-batch training targets, averaged over steps
  double kld = 0.0;          // pseudo-label class distribution vs. unlabeled ground truth
  double pseudo_acc = 0.0;
  double pseudo_rec = 0.0;
  double box_miou = 0.0;
  bool box_miou_valid = false;
  double ap50 = 0.0;
  double ap5095 = 0.0;
  std::int64_t n_pseudo = 0;  // pseudo bank size after the refresh
  std::int64_t crops_attempted = 0;
  std::int64_t crops_placed = 0;
  std::vector<double> pseudo_recall;
  std::vector<double> mu;
  std::vector<std::int64_t> exposure;  // clean training targets per class this epoch
};

struct RunReport {
  std::uint64_t seed = 0;
  std::string config_json;  // resolved config echo
  std::vector<std::string> class_names;
  std::vector<EpochTrace> epochs;
  DetectorParams final_teacher;
};

/// Everything the loop owns between epochs.
///
/// `unlabeled_truth` keeps hidden ground truth. Only the simulated world
/// (detector, image-level oracle, label-noise accounting) and the metrics read
/// it; learning decisions use `unlabeled_view`.
struct LoopState {
  Dataset labeled;
  Dataset unlabeled_truth;
  Dataset unlabeled_view;
  DetectorParams student;
  DetectorParams teacher;
  CropBank bank;
  int mutual_epoch = 0;  // completed mutual-learning epochs
};

/// Supervised pre-training on the labeled split. Returns the student; the
/// caller initializes the teacher as a copy. Throws ConfigError when the
/// labeled split is empty.
DetectorParams pretrain(const ExperimentConfig& cfg, const Dataset& labeled, std::uint64_t seed);

/// Splits, pre-trains, builds the crop bank and fills the pseudo bank from an
/// initial teacher pass.
LoopState init_loop(const ExperimentConfig& cfg, const Dataset& dataset);

/// One mutual-learning epoch: detect, filter, rebalance, mix, account losses,
/// update the student, EMA the teacher, refresh the pseudo bank, evaluate.
EpochTrace run_epoch(LoopState& state, const ExperimentConfig& cfg);

/// Loads the configured dataset (COCO file or synthetic generator).
Dataset load_dataset(const ExperimentConfig& cfg);

/// split -> pretrain -> (epochs - pretrain_epochs) x run_epoch. Fully
/// determined by (cfg, dataset). Throws ConfigError before doing any work
/// when the config is invalid.
RunReport run_experiment(const ExperimentConfig& cfg, const Dataset& dataset);

}  // namespace acrst
