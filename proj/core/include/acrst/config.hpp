#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acrst/filter.hpp"
#include "acrst/metrics.hpp"
#include "acrst/model.hpp"
#include "acrst/rebalance.hpp"
#include "acrst/synthetic.hpp"

namespace acrst {

struct Toggles {
  bool fbr = true;
  bool affr = true;
  bool two_stage = true;
  bool selective_supervision = true;

  friend bool operator==(const Toggles&, const Toggles&) = default;
};

/// Sets one toggle by name. Returns false for an unknown name.
bool set_toggle(Toggles& toggles, std::string_view name, bool value);

struct DetectorConfig {
  std::vector<double> initial_recall_skill{0.5};  // one value broadcasts to every class
  double confusion_rate = 0.1;
  double loc_skill = 0.5;
  double partial_rate = 0.2;
  double fp_rate = 0.5;
  double confidence_sharpness = 8.0;
  double lr = 0.1;
  double ema_alpha = 0.999;
  double confusion_floor = 0.02;
  double partial_floor = 0.02;
  double noise_gain = 0.3;
};

struct EvalConfig {
  double iou_thr = 0.5;
  double kld_epsilon = 1e-6;
  ProposalModel proposals;
};

struct DatasetSource {
  std::optional<std::string> coco_path;  // when unset the synthetic generator is used
  SyntheticConfig synthetic;
};

/// A named toggle combination of a sweep.
struct SweepRun {
  std::string name;
  Toggles toggles;
};

struct SweepConfig {
  std::vector<SweepRun> runs;
  std::vector<std::uint64_t> seeds;  // empty: use the experiment seed
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  DatasetSource dataset;
  double split_fraction = 0.1;
  int epochs = 40;
  int pretrain_epochs = 10;
  int steps_per_epoch = 1;
  int batch_labeled = 32;
  int batch_unlabeled = 32;
  double lambda_unsup = 2.0;
  int refresh_period = 1;
  PasteConfig paste;
  FilterConfig filter;
  DetectorConfig detector;
  OracleNoise oracle;
  Toggles toggles;
  EvalConfig eval;
  std::optional<SweepConfig> sweep;
};

/// Throws ConfigError naming the first offending key.
void validate(const ExperimentConfig& cfg);

/// Parses a JSON config; missing optional keys take the defaults above.
/// Throws ConfigError (key "" for malformed JSON, with the byte offset).
ExperimentConfig parse_config(std::string_view text);

/// Canonical JSON of the fully-resolved config (defaults included).
std::string config_to_json(const ExperimentConfig& cfg);

/// The initial detector for `num_classes` classes.
DetectorParams initial_params(const DetectorConfig& cfg, int num_classes);

UpdateRule update_rule(const DetectorConfig& cfg);

}  // namespace acrst
