#pragma once

#include <string>
#include <string_view>

#include "acrst/simloop.hpp"

namespace acrst {

/// Column order of the per-epoch CSV.
inline constexpr const char* kEpochCsvHeader =
    "epoch,fg_ratio,kld,pseudo_acc,pseudo_rec,box_miou,ap50,ap5095,n_pseudo";

/// Final-epoch metrics plus the run-wide mean foreground ratio.
struct RunSummary {
  int epochs = 0;
  double fg_ratio_mean = 0.0;
  double kld = 0.0;
  double pseudo_acc = 0.0;
  double pseudo_rec = 0.0;
  double box_miou = 0.0;
  double ap50 = 0.0;
  double ap5095 = 0.0;
  std::int64_t n_pseudo = 0;
};

RunSummary summarize(const RunReport& report);

/// report.json contents: seed, config echo, class names, per-epoch traces,
/// summary and final teacher parameters.
std::string report_to_json(const RunReport& report);

/// epochs.csv contents (header kEpochCsvHeader).
std::string epochs_csv(const RunReport& report);

/// Reads back the fields written by report_to_json. Throws ParseError with
/// the byte offset on malformed input.
RunReport parse_report_json(std::string_view text);

}  // namespace acrst
