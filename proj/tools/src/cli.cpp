#include "acrst/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "acrst/config.hpp"
#include "acrst/error.hpp"
#include "acrst/report.hpp"
#include "acrst/simloop.hpp"

namespace acrst::cli {
namespace fs = std::filesystem;

namespace {

// Thrown for anything that maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw UsageError("no output directory given");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("output directory " + dir + " is not usable");
}

ExperimentConfig load_config(const CommandSpec& spec) {
  if (spec.config_path.empty()) throw UsageError("no config file given");
  const std::string text = read_file(spec.config_path);
  ExperimentConfig cfg = parse_config(text);
  if (spec.seed) cfg.seed = *spec.seed;
  for (const auto& [name, value] : spec.toggle_overrides) {
    if (!set_toggle(cfg.toggles, name, value)) throw ConfigError("toggles." + name, "unknown toggle");
  }
  validate(cfg);
  return cfg;
}

Dataset load_input(const ExperimentConfig& cfg) {
  try {
    return load_dataset(cfg);
  } catch (const ParseError& e) {
    throw ConfigError("dataset.coco_path", e.what());
  } catch (const ValidationError& e) {
    throw ConfigError("dataset.coco_path", e.what());
  }
}

void write_run(const RunReport& report, const fs::path& dir) {
  write_file(dir / "report.json", report_to_json(report));
  write_file(dir / "epochs.csv", epochs_csv(report));
}

// Runs `body`, mapping exception categories onto the exit-code contract.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

const std::vector<std::pair<const char*, double EpochTrace::*>>& slice_metrics() {
  static const std::vector<std::pair<const char*, double EpochTrace::*>> metrics{
      {"fg_ratio", &EpochTrace::fg_ratio},     {"kld", &EpochTrace::kld},
      {"pseudo_acc", &EpochTrace::pseudo_acc}, {"pseudo_rec", &EpochTrace::pseudo_rec},
      {"box_miou", &EpochTrace::box_miou},     {"ap50", &EpochTrace::ap50},
      {"ap5095", &EpochTrace::ap5095},         {"loss_total", &EpochTrace::loss_total},
  };
  return metrics;
}

void print_summary(const std::string& title, const RunReport& r, std::ostream& out) {
  const RunSummary s = summarize(r);
  out << title << " (seed " << r.seed << ", " << s.epochs << " mutual epochs)\n"
      << "  fg_ratio (mean)  " << fmt(s.fg_ratio_mean) << '\n'
      << "  class kld        " << fmt(s.kld) << '\n'
      << "  pseudo accuracy  " << fmt(s.pseudo_acc) << '\n'
      << "  pseudo recall    " << fmt(s.pseudo_rec) << '\n'
      << "  box mIoU         " << fmt(s.box_miou) << '\n'
      << "  AP50             " << fmt(s.ap50) << '\n'
      << "  AP50:95          " << fmt(s.ap5095) << '\n'
      << "  pseudo bank size " << s.n_pseudo << '\n';
}

RunReport load_report(const fs::path& file) {
  try {
    return parse_report_json(read_file(file));
  } catch (const ParseError& e) {
    throw UsageError(file.string() + ": " + e.what());
  }
}

void write_slices(const RunReport& r, const fs::path& dir) {
  for (const auto& [name, field] : slice_metrics()) {
    std::string csv = std::string("epoch,") + name + "\n";
    for (const auto& t : r.epochs) csv += std::to_string(t.epoch) + "," + fmt(t.*field) + "\n";
    write_file(dir / (std::string(name) + "_vs_epoch.csv"), csv);
  }
}

}  // namespace

int cmd_run(const CommandSpec& spec, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_config(spec);
    ensure_dir(spec.output_dir);
    const Dataset dataset = load_input(cfg);
    const RunReport report = run_experiment(cfg, dataset);
    write_run(report, spec.output_dir);
    out << "wrote " << (fs::path(spec.output_dir) / "report.json").string() << " and epochs.csv ("
        << report.epochs.size() << " epochs)\n";
    return int{kOk};
  });
}

int cmd_sweep(const CommandSpec& spec, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ExperimentConfig base = load_config(spec);
    if (!base.sweep) throw ConfigError("sweep", "missing sweep section");
    SweepConfig sweep = *base.sweep;
    if (sweep.runs.empty() && sweep.seeds.empty()) throw ConfigError("sweep", "empty sweep list");
    if (sweep.runs.empty()) sweep.runs.push_back({"default", base.toggles});
    if (sweep.seeds.empty()) sweep.seeds.push_back(base.seed);
    ensure_dir(spec.output_dir);
    const Dataset dataset = load_input(base);

    std::string summary =
        "run,seed,fbr,affr,two_stage,selective_supervision,status,fg_ratio_mean,kld,pseudo_acc,"
        "pseudo_rec,box_miou,ap50,ap5095,n_pseudo\n";
    int failures = 0;
    for (const auto& run : sweep.runs) {
      for (std::uint64_t seed : sweep.seeds) {
        const std::string name =
            sweep.seeds.size() > 1 ? run.name + "_seed" + std::to_string(seed) : run.name;
        ExperimentConfig cfg = base;
        cfg.seed = seed;
        cfg.toggles = run.toggles;
        cfg.sweep.reset();
        const auto flag = [](bool b) { return b ? "1" : "0"; };
        std::string row = name + "," + std::to_string(seed) + "," + flag(run.toggles.fbr) + "," +
                          flag(run.toggles.affr) + "," + flag(run.toggles.two_stage) + "," +
                          flag(run.toggles.selective_supervision) + ",";
        try {
          const fs::path dir = fs::path(spec.output_dir) / name;
          fs::create_directories(dir);
          const RunReport report = run_experiment(cfg, dataset);
          write_run(report, dir);
          const RunSummary s = summarize(report);
          row += "ok," + fmt(s.fg_ratio_mean) + "," + fmt(s.kld) + "," + fmt(s.pseudo_acc) + "," +
                 fmt(s.pseudo_rec) + "," + fmt(s.box_miou) + "," + fmt(s.ap50) + "," +
                 fmt(s.ap5095) + "," + std::to_string(s.n_pseudo);
          out << "run " << name << ": AP50:95 " << fmt(s.ap5095) << '\n';
        } catch (const std::exception& e) {
          ++failures;
          err << "run " << name << " failed: " << e.what() << '\n';
          row += "failed,,,,,,,,";
        }
        summary += row + "\n";
      }
    }
    write_file(fs::path(spec.output_dir) / "summary.csv", summary);
    return failures ? int{kRuntimeFailure} : int{kOk};
  });
}

int cmd_report(const CommandSpec& spec, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const fs::path dir = spec.output_dir;
    if (dir.empty() || !fs::is_directory(dir)) throw UsageError("no such directory: " + dir.string());

    if (fs::exists(dir / "report.json")) {
      const RunReport r = load_report(dir / "report.json");
      print_summary(dir.filename().string(), r, out);
      write_slices(r, dir);
      return int{kOk};
    }

    std::vector<fs::path> runs;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_directory() && fs::exists(entry.path() / "report.json")) runs.push_back(entry.path());
    }
    if (runs.empty()) throw UsageError("no report.json found in " + dir.string());
    std::sort(runs.begin(), runs.end());

    std::string aggregate = "run,seed,epochs,fg_ratio_mean,kld,pseudo_acc,pseudo_rec,box_miou,ap50,ap5095\n";
    for (const auto& run_dir : runs) {
      const RunReport r = load_report(run_dir / "report.json");
      print_summary(run_dir.filename().string(), r, out);
      write_slices(r, run_dir);
      const RunSummary s = summarize(r);
      aggregate += run_dir.filename().string() + "," + std::to_string(r.seed) + "," +
                   std::to_string(s.epochs) + "," + fmt(s.fg_ratio_mean) + "," + fmt(s.kld) + "," +
                   fmt(s.pseudo_acc) + "," + fmt(s.pseudo_rec) + "," + fmt(s.box_miou) + "," +
                   fmt(s.ap50) + "," + fmt(s.ap5095) + "\n";
    }
    write_file(dir / "report_aggregate.csv", aggregate);
    out << "aggregated " << runs.size() << " runs\n";
    return int{kOk};
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive class-rebalancing self-training simulator", "acrst"};
  app.require_subcommand(1);

  CommandSpec spec;
  std::vector<std::string> enable;
  std::vector<std::string> disable;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", spec.config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", spec.output_dir, "Output directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--enable", enable, "Enable a toggle (fbr, affr, two_stage, selective_supervision)");
  run->add_option("--disable", disable, "Disable a toggle");

  auto* sweep = app.add_subcommand("sweep", "Run the config's sweep grid");
  sweep->add_option("--config", spec.config_path, "Experiment config (JSON)")->required();
  sweep->add_option("--out", spec.output_dir, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Summarize run artifacts");
  report->add_option("--in", spec.output_dir, "Run or sweep directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? int{kOk} : int{kUsageError};
  }

  if (*seed_opt) spec.seed = seed;
  for (const auto& t : enable) spec.toggle_overrides.emplace_back(t, true);
  for (const auto& t : disable) spec.toggle_overrides.emplace_back(t, false);

  if (run->parsed()) {
    spec.subcommand = Subcommand::run;
    return cmd_run(spec, out, err);
  }
  if (sweep->parsed()) {
    spec.subcommand = Subcommand::sweep;
    return cmd_sweep(spec, out, err);
  }
  spec.subcommand = Subcommand::report;
  return cmd_report(spec, out, err);
}

}  // namespace acrst::cli
