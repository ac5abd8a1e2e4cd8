#include "acrst/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acrst/error.hpp"
#include "acrst/random.hpp"

namespace acrst {

Dataset make_synthetic_dataset(const SyntheticConfig& cfg) {
  if (cfg.num_images < 0 || cfg.num_classes < 1) {
    throw ArgumentError("synthetic dataset needs num_images >= 0 and num_classes >= 1");
  }
  if (cfg.min_instances < 0 || cfg.max_instances < cfg.min_instances) {
    throw ArgumentError("synthetic dataset needs 0 <= min_instances <= max_instances");
  }
  if (!(cfg.min_box_fraction > 0.0) || cfg.max_box_fraction < cfg.min_box_fraction ||
      cfg.max_box_fraction > 1.0) {
    throw ArgumentError("synthetic box fractions must satisfy 0 < min <= max <= 1");
  }

  Dataset ds;
  for (int k = 1; k <= cfg.num_classes; ++k) {
    ds.categories.push_back({k, "class_" + std::to_string(k)});
  }

  std::vector<double> cumulative;
  double total = 0.0;
  for (int k = 1; k <= cfg.num_classes; ++k) {
    total += 1.0 / std::pow(static_cast<double>(k), cfg.zipf_exponent);
    cumulative.push_back(total);
  }

  Rng rng{derive_seed(cfg.seed, "synthetic")};
  for (int i = 0; i < cfg.num_images; ++i) {
    ImageRecord rec{i + 1, cfg.width, cfg.height, {}};
    const int span = cfg.max_instances - cfg.min_instances + 1;
    const int count = cfg.min_instances + static_cast<int>(uniform_index(rng, span));
    for (int j = 0; j < count; ++j) {
      const double u = uniform(rng, 0.0, total);
      int cls = 1;
      while (cls < cfg.num_classes && cumulative[cls - 1] <= u) ++cls;
      const double w = std::round(cfg.width * uniform(rng, cfg.min_box_fraction, cfg.max_box_fraction));
      const double h = std::round(cfg.height * uniform(rng, cfg.min_box_fraction, cfg.max_box_fraction));
      const double x = std::floor(uniform(rng, 0.0, cfg.width - w + 1.0));
      const double y = std::floor(uniform(rng, 0.0, cfg.height - h + 1.0));
      rec.ground_truth.push_back(Instance{cls, BBox{x, y, std::max(1.0, w), std::max(1.0, h)}, rec.id});
    }
    ds.images.push_back(std::move(rec));
  }
  ds.labeled.assign(ds.images.size(), true);
  return ds;
}

}  // namespace acrst
