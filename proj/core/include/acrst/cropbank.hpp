#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "acrst/dataset.hpp"
#include "acrst/random.hpp"
#include "acrst/sampling.hpp"

namespace acrst {

enum class CropOrigin { labeled, pseudo };

const char* to_string(CropOrigin origin) noexcept;

/// One instance-level annotation held by the bank.
struct CropEntry {
  ImageId source_image_id = 0;
  BBox bbox;
  int class_id = 0;
  double score = 1.0;  // always 1.0 for labeled entries
  CropOrigin origin = CropOrigin::labeled;

  friend bool operator==(const CropEntry&, const CropEntry&) = default;
};

using PseudoLabelMap = std::map<ImageId, std::vector<Prediction>>;

/// Memory of instance annotations: a labeled bank fixed at construction and
/// a pseudo bank replaced wholesale on refresh. Size is unbounded.
class CropBank {
 public:
  CropBank() = default;
  explicit CropBank(int num_classes);

  /// One entry per ground-truth instance of the labeled images.
  static CropBank build_labeled(const Dataset& labeled);

  const std::vector<CropEntry>& labeled_bank() const noexcept { return labeled_; }
  const std::vector<CropEntry>& pseudo_bank() const noexcept { return pseudo_; }
  std::size_t labeled_size() const noexcept { return labeled_.size(); }
  std::size_t pseudo_size() const noexcept { return pseudo_.size(); }
  int num_classes() const noexcept { return num_classes_; }
  int refresh_counter() const noexcept { return refresh_counter_; }

  /// Number of entries of class k across both banks.
  std::size_t class_size(int class_id) const;

  /// Pseudo entries per class (index k-1).
  std::vector<std::int64_t> pseudo_class_counts() const;

  /// Entry `i` of the union of both banks restricted to class k.
  const CropEntry& class_entry(int class_id, std::size_t i) const;

  /// Replaces the pseudo bank when `epoch % period == 0`; otherwise only the
  /// refresh counter advances. Throws ArgumentError when period <= 0.
  void refresh_pseudo(const PseudoLabelMap& pseudo_labels, int period, int epoch);

  /// Draws `n` entries with replacement: a class from `distribution`
  /// (renormalized over classes that have entries), then a uniform entry.
  /// Throws EmptyBankError when no class with positive mass has entries.
  std::vector<CropEntry> sample(const SamplingDistribution& distribution, std::size_t n,
                                Rng& rng) const;

  /// CSV dump: source_image_id,class_id,x,y,w,h,score,origin
  std::string to_csv() const;

 private:
  void rebuild_pseudo_index();

  int num_classes_ = 0;
  int refresh_counter_ = 0;
  std::vector<CropEntry> labeled_;
  std::vector<CropEntry> pseudo_;
  std::vector<std::vector<std::size_t>> labeled_index_;  // class -> positions in labeled_
  std::vector<std::vector<std::size_t>> pseudo_index_;
};

CropBank build_labeled_bank(const Dataset& labeled);
CropBank refresh_pseudo_bank(CropBank bank, const PseudoLabelMap& pseudo_labels, int period,
                             int epoch);
std::vector<CropEntry> sample_crops(const CropBank& bank, const SamplingDistribution& distribution,
                                    std::size_t n, Rng& rng);

}  // namespace acrst
