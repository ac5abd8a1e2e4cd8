#include "acrst/cropbank.hpp"

#include <sstream>

#include "acrst/error.hpp"

namespace acrst {

SamplingDistribution SamplingDistribution::uniform(int num_classes) {
  const auto k = static_cast<std::size_t>(num_classes);
  return {std::vector<double>(k, k ? 1.0 / static_cast<double>(k) : 0.0), 0.0};
}

SamplingDistribution SamplingDistribution::one_hot(int num_classes, int class_id) {
  SamplingDistribution d{std::vector<double>(static_cast<std::size_t>(num_classes), 0.0), 0.0};
  d.mu.at(static_cast<std::size_t>(class_id - 1)) = 1.0;
  return d;
}

const char* to_string(CropOrigin origin) noexcept {
  return origin == CropOrigin::labeled ? "labeled" : "pseudo";
}

CropBank::CropBank(int num_classes)
    : num_classes_(num_classes),
      labeled_index_(static_cast<std::size_t>(num_classes)),
      pseudo_index_(static_cast<std::size_t>(num_classes)) {}

CropBank CropBank::build_labeled(const Dataset& labeled) {
  CropBank bank(labeled.num_classes());
  for (std::size_t i = 0; i < labeled.images.size(); ++i) {
    if (!labeled.labeled[i]) continue;
    for (const auto& inst : labeled.images[i].ground_truth) {
      bank.labeled_index_.at(inst.class_id - 1).push_back(bank.labeled_.size());
      bank.labeled_.push_back(
          CropEntry{labeled.images[i].id, inst.bbox, inst.class_id, 1.0, CropOrigin::labeled});
    }
  }
  return bank;
}

std::size_t CropBank::class_size(int class_id) const {
  const auto k = static_cast<std::size_t>(class_id - 1);
  return labeled_index_.at(k).size() + pseudo_index_.at(k).size();
}

std::vector<std::int64_t> CropBank::pseudo_class_counts() const {
  std::vector<std::int64_t> counts;
  counts.reserve(pseudo_index_.size());
  for (const auto& idx : pseudo_index_) counts.push_back(static_cast<std::int64_t>(idx.size()));
  return counts;
}

const CropEntry& CropBank::class_entry(int class_id, std::size_t i) const {
  const auto k = static_cast<std::size_t>(class_id - 1);
  const auto& lab = labeled_index_.at(k);
  if (i < lab.size()) return labeled_[lab[i]];
  return pseudo_.at(pseudo_index_.at(k).at(i - lab.size()));
}

void CropBank::rebuild_pseudo_index() {
  pseudo_index_.assign(static_cast<std::size_t>(num_classes_), {});
  for (std::size_t i = 0; i < pseudo_.size(); ++i) {
    pseudo_index_.at(pseudo_[i].class_id - 1).push_back(i);
  }
}

void CropBank::refresh_pseudo(const PseudoLabelMap& pseudo_labels, int period, int epoch) {
  if (period <= 0) throw ArgumentError("refresh period must be positive");
  if (epoch % period != 0) {
    ++refresh_counter_;
    return;
  }
  pseudo_.clear();
  for (const auto& [image_id, preds] : pseudo_labels) {
    for (const auto& p : preds) {
      if (p.class_id < 1 || p.class_id > num_classes_ || !p.bbox.valid()) continue;
      pseudo_.push_back(CropEntry{image_id, p.bbox, p.class_id, p.score, CropOrigin::pseudo});
    }
  }
  rebuild_pseudo_index();
  refresh_counter_ = 0;
}

std::vector<CropEntry> CropBank::sample(const SamplingDistribution& distribution, std::size_t n,
                                        Rng& rng) const {
  if (distribution.mu.size() != static_cast<std::size_t>(num_classes_)) {
    throw ArgumentError("sampling distribution size does not match the number of classes");
  }
  std::vector<double> weights(distribution.mu.size(), 0.0);
  double total = 0.0;
  for (int k = 1; k <= num_classes_; ++k) {
    if (class_size(k) == 0 || !(distribution.mu[k - 1] > 0.0)) continue;
    weights[k - 1] = distribution.mu[k - 1];
    total += weights[k - 1];
  }
  if (!(total > 0.0)) throw EmptyBankError("no class with positive sampling mass has entries");

  std::vector<CropEntry> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double u = uniform(rng, 0.0, total);
    double acc = 0.0;
    int cls = 0;
    for (int k = 1; k <= num_classes_; ++k) {
      if (weights[k - 1] <= 0.0) continue;
      cls = k;  // last positive class absorbs rounding at the top end
      acc += weights[k - 1];
      if (u < acc) break;
    }
    out.push_back(class_entry(cls, uniform_index(rng, class_size(cls))));
  }
  return out;
}

std::string CropBank::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "source_image_id,class_id,x,y,w,h,score,origin\n";
  for (const auto* bank : {&labeled_, &pseudo_}) {
    for (const auto& e : *bank) {
      os << e.source_image_id << ',' << e.class_id << ',' << e.bbox.x << ',' << e.bbox.y << ','
         << e.bbox.w << ',' << e.bbox.h << ',' << e.score << ',' << to_string(e.origin) << '\n';
    }
  }
  return os.str();
}

CropBank build_labeled_bank(const Dataset& labeled) { return CropBank::build_labeled(labeled); }

CropBank refresh_pseudo_bank(CropBank bank, const PseudoLabelMap& pseudo_labels, int period,
                             int epoch) {
  bank.refresh_pseudo(pseudo_labels, period, epoch);
  return bank;
}

std::vector<CropEntry> sample_crops(const CropBank& bank, const SamplingDistribution& distribution,
                                    std::size_t n, Rng& rng) {
  return bank.sample(distribution, n, rng);
}

}  // namespace acrst
