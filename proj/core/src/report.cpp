#include "acrst/report.hpp"

#include <cstdio>

#include "acrst/error.hpp"
#include "json.hpp"

namespace acrst {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json loss_json(const LossBreakdown& l) {
  return {{"rpn_cls", l.rpn_cls},
          {"rpn_reg", l.rpn_reg},
          {"roi_cls", l.roi_cls},
          {"roi_reg", l.roi_reg},
          {"total", l.total}};
}

LossBreakdown loss_from(const ordered_json& j) {
  return {j.at("rpn_cls").get<double>(), j.at("rpn_reg").get<double>(),
          j.at("roi_cls").get<double>(), j.at("roi_reg").get<double>(),
          j.at("total").get<double>()};
}

ordered_json params_json(const DetectorParams& p) {
  return {{"recall_skill", p.recall_skill},
          {"confusion_rate", p.confusion_rate},
          {"loc_skill", p.loc_skill},
          {"partial_rate", p.partial_rate},
          {"fp_rate", p.fp_rate},
          {"confidence_sharpness", p.confidence_sharpness},
          {"class_prior", p.class_prior}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

RunSummary summarize(const RunReport& report) {
  RunSummary s;
  s.epochs = static_cast<int>(report.epochs.size());
  if (report.epochs.empty()) return s;
  for (const auto& t : report.epochs) s.fg_ratio_mean += t.fg_ratio;
  s.fg_ratio_mean /= static_cast<double>(report.epochs.size());
  const EpochTrace& last = report.epochs.back();
  s.kld = last.kld;
  s.pseudo_acc = last.pseudo_acc;
  s.pseudo_rec = last.pseudo_rec;
  s.box_miou = last.box_miou;
  s.ap50 = last.ap50;
  s.ap5095 = last.ap5095;
  s.n_pseudo = last.n_pseudo;
  return s;
}

std::string report_to_json(const RunReport& report) {
  ordered_json epochs = ordered_json::array();
  for (const auto& t : report.epochs) {
    epochs.push_back({{"epoch", t.epoch},
                      {"loss_sup", loss_json(t.loss_sup)},
                      {"loss_unsup", loss_json(t.loss_unsup)},
                      {"loss_total", t.loss_total},
                      {"fg_ratio", t.fg_ratio},
                      {"kld", t.kld},
                      {"pseudo_acc", t.pseudo_acc},
                      {"pseudo_rec", t.pseudo_rec},
                      {"box_miou", t.box_miou},
                      {"box_miou_valid", t.box_miou_valid},
                      {"ap50", t.ap50},
                      {"ap5095", t.ap5095},
                      {"n_pseudo", t.n_pseudo},
                      {"crops_attempted", t.crops_attempted},
                      {"crops_placed", t.crops_placed},
                      {"pseudo_recall", t.pseudo_recall},
                      {"mu", t.mu},
                      {"exposure", t.exposure}});
  }
  const RunSummary s = summarize(report);
  ordered_json doc = {
      {"seed", report.seed},
      {"config", ordered_json::parse(report.config_json)},
      {"class_names", report.class_names},
      {"epochs", epochs},
      {"summary",
       {{"epochs", s.epochs},
        {"fg_ratio_mean", s.fg_ratio_mean},
        {"kld", s.kld},
        {"pseudo_acc", s.pseudo_acc},
        {"pseudo_rec", s.pseudo_rec},
        {"box_miou", s.box_miou},
        {"ap50", s.ap50},
        {"ap5095", s.ap5095},
        {"n_pseudo", s.n_pseudo}}},
      {"final_teacher", params_json(report.final_teacher)},
  };
  return doc.dump(2) + "\n";
}

std::string epochs_csv(const RunReport& report) {
  std::string out = std::string(kEpochCsvHeader) + "\n";
  for (const auto& t : report.epochs) {
    out += std::to_string(t.epoch) + "," + fmt(t.fg_ratio) + "," + fmt(t.kld) + "," +
           fmt(t.pseudo_acc) + "," + fmt(t.pseudo_rec) + "," + fmt(t.box_miou) + "," +
           fmt(t.ap50) + "," + fmt(t.ap5095) + "," + std::to_string(t.n_pseudo) + "\n";
  }
  return out;
}

RunReport parse_report_json(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text.begin(), text.end());
  } catch (const ordered_json::parse_error& e) {
    throw ParseError("parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    RunReport r;
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.config_json = doc.at("config").dump(2);
    r.class_names = doc.at("class_names").get<std::vector<std::string>>();
    for (const auto& e : doc.at("epochs")) {
      EpochTrace t;
      t.epoch = e.at("epoch").get<int>();
      t.loss_sup = loss_from(e.at("loss_sup"));
      t.loss_unsup = loss_from(e.at("loss_unsup"));
      t.loss_total = e.at("loss_total").get<double>();
      t.fg_ratio = e.at("fg_ratio").get<double>();
      t.kld = e.at("kld").get<double>();
      t.pseudo_acc = e.at("pseudo_acc").get<double>();
      t.pseudo_rec = e.at("pseudo_rec").get<double>();
      t.box_miou = e.at("box_miou").get<double>();
      t.box_miou_valid = e.at("box_miou_valid").get<bool>();
      t.ap50 = e.at("ap50").get<double>();
      t.ap5095 = e.at("ap5095").get<double>();
      t.n_pseudo = e.at("n_pseudo").get<std::int64_t>();
      t.crops_attempted = e.at("crops_attempted").get<std::int64_t>();
      t.crops_placed = e.at("crops_placed").get<std::int64_t>();
      t.pseudo_recall = e.at("pseudo_recall").get<std::vector<double>>();
      t.mu = e.at("mu").get<std::vector<double>>();
      t.exposure = e.at("exposure").get<std::vector<std::int64_t>>();
      r.epochs.push_back(std::move(t));
    }
    const auto& p = doc.at("final_teacher");
    r.final_teacher.recall_skill = p.at("recall_skill").get<std::vector<double>>();
    r.final_teacher.confusion_rate = p.at("confusion_rate").get<double>();
    r.final_teacher.loc_skill = p.at("loc_skill").get<double>();
    r.final_teacher.partial_rate = p.at("partial_rate").get<double>();
    r.final_teacher.fp_rate = p.at("fp_rate").get<double>();
    r.final_teacher.confidence_sharpness = p.at("confidence_sharpness").get<double>();
    r.final_teacher.class_prior = p.at("class_prior").get<std::vector<double>>();
    return r;
  } catch (const ordered_json::exception& e) {
    throw ParseError(std::string("report structure: ") + e.what());
  }
}

}  // namespace acrst
