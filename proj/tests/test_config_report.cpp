#include <doctest.h>

#include <algorithm>
#include <string>

#include "acrst/config.hpp"
#include "acrst/error.hpp"
#include "acrst/report.hpp"
#include "acrst/simloop.hpp"

using namespace acrst;

namespace {

std::string config_error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("empty config takes defaults") {
  const ExperimentConfig cfg = parse_config("{}");
  CHECK(cfg.seed == 1);
  CHECK(cfg.epochs == 40);
  CHECK(cfg.pretrain_epochs == 10);
  CHECK(cfg.split_fraction == 0.1);
  CHECK(cfg.lambda_unsup == 2.0);
  CHECK(cfg.filter.tau_cls == 0.7);
  CHECK(cfg.filter.tau_ml == 0.2);
  CHECK(cfg.paste.beta == 2.0);
  CHECK(cfg.toggles == Toggles{});
  CHECK_FALSE(cfg.sweep.has_value());
  CHECK_FALSE(cfg.dataset.coco_path.has_value());
}

TEST_CASE("config values are read") {
  const ExperimentConfig cfg = parse_config(R"({
    "seed": 9, "epochs": 5, "pretrain_epochs": 1,
    "filter": {"mode": "two_stage_mining", "tau_ml": 0.4},
    "detector": {"initial_recall_skill": [0.1, 0.2, 0.3], "ema_alpha": 0.5},
    "dataset": {"synthetic": {"num_classes": 3}},
    "toggles": {"affr": false},
    "sweep": {"runs": [{"name": "a", "toggles": {"fbr": false}}, {}], "seeds": [1, 2]}
  })");
  CHECK(cfg.seed == 9);
  CHECK(cfg.filter.mode == FilterMode::two_stage_mining);
  CHECK(cfg.filter.tau_ml == 0.4);
  CHECK(cfg.detector.initial_recall_skill == std::vector<double>{0.1, 0.2, 0.3});
  CHECK_FALSE(cfg.toggles.affr);
  REQUIRE(cfg.sweep.has_value());
  REQUIRE(cfg.sweep->runs.size() == 2);
  CHECK(cfg.sweep->runs[0].name == "a");
  CHECK_FALSE(cfg.sweep->runs[0].toggles.fbr);
  CHECK_FALSE(cfg.sweep->runs[0].toggles.affr);
  CHECK(cfg.sweep->runs[1].name == "run_1");
  CHECK(cfg.sweep->seeds == std::vector<std::uint64_t>{1, 2});
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_error_key(R"({"epochs": 5, "pretrain_epochs": 6})") == "epochs");
  CHECK(config_error_key(R"({"split_fraction": 1.0})") == "split_fraction");
  CHECK(config_error_key(R"({"filter": {"tau_cls": 2}})") == "filter.tau_cls");
  CHECK(config_error_key(R"({"filter": {"mode": "both"}})") == "filter.mode");
  CHECK(config_error_key(R"({"paste": {"beta": -1}})") == "paste.beta");
  CHECK(config_error_key(R"({"detector": {"ema_alpha": 1.5}})") == "detector.ema_alpha");
  CHECK(config_error_key(R"({"bogus": 1})") == "bogus");
  CHECK(config_error_key(R"({"toggles": {"fbr": 1}})") == "toggles.fbr");
  CHECK(config_error_key(R"({"seed": -3})") == "seed");
  CHECK(config_error_key(R"({"sweep": {"runs": [{"name": "a/b"}]}})") == "sweep.runs[0].name");
  CHECK(config_error_key("{\"seed\": ") == "");
  CHECK(config_error_key(R"({"detector": {"initial_recall_skill": [0.1, 0.2]},
                             "dataset": {"synthetic": {"num_classes": 3}}})") ==
        "detector.initial_recall_skill");
}

TEST_CASE("malformed config reports a byte offset") {
  try {
    parse_config("{\"seed\": 1,,}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("resolved config round-trips through JSON") {
  ExperimentConfig cfg;
  cfg.seed = 77;
  cfg.filter.mode = FilterMode::two_stage_mining;
  cfg.toggles.selective_supervision = false;
  cfg.detector.initial_recall_skill = {0.4};
  cfg.sweep = SweepConfig{{{"x", Toggles{false, true, true, false}}}, {3, 4}};
  const std::string text = config_to_json(cfg);
  const ExperimentConfig back = parse_config(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.seed == 77);
  CHECK(back.sweep->runs[0].toggles == cfg.sweep->runs[0].toggles);
}

TEST_CASE("toggles by name") {
  Toggles t;
  CHECK(set_toggle(t, "two_stage", false));
  CHECK_FALSE(t.two_stage);
  CHECK(set_toggle(t, "selective_supervision", false));
  CHECK_FALSE(t.selective_supervision);
  CHECK_FALSE(set_toggle(t, "mixup", true));
}

TEST_CASE("initial params broadcast a single skill") {
  DetectorConfig d;
  d.initial_recall_skill = {0.3};
  const auto p = initial_params(d, 4);
  CHECK(p.recall_skill == std::vector<double>(4, 0.3));
  CHECK(p.class_prior.size() == 4);
  d.initial_recall_skill = {0.1, 0.2};
  CHECK(initial_params(d, 2).recall_skill == std::vector<double>{0.1, 0.2});
}

TEST_CASE("run report round-trips through JSON") {
  ExperimentConfig cfg;
  cfg.seed = 5;
  cfg.dataset.synthetic.num_images = 40;
  cfg.dataset.synthetic.num_classes = 3;
  cfg.split_fraction = 0.3;
  cfg.epochs = 4;
  cfg.pretrain_epochs = 1;
  cfg.batch_labeled = 4;
  cfg.batch_unlabeled = 4;
  const RunReport r = run_experiment(cfg, load_dataset(cfg));
  const std::string text = report_to_json(r);
  const RunReport back = parse_report_json(text);
  CHECK(report_to_json(back) == text);
  CHECK(back.seed == 5);
  CHECK(back.epochs.size() == 3);
  CHECK(back.final_teacher == r.final_teacher);
  CHECK(epochs_csv(back) == epochs_csv(r));

  const RunSummary s = summarize(r);
  CHECK(s.epochs == 3);
  CHECK(s.ap5095 == r.epochs.back().ap5095);
  CHECK(s.fg_ratio_mean == doctest::Approx((r.epochs[0].fg_ratio + r.epochs[1].fg_ratio +
                                            r.epochs[2].fg_ratio) / 3));

  const std::string csv = epochs_csv(r);
  CHECK(csv.rfind(std::string(kEpochCsvHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("corrupt report JSON raises ParseError with location") {
  try {
    parse_report_json("{\"seed\": 1, \"epochs\": [");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_report_json("{\"seed\": 1}"), ParseError);
}
