#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "acrst/error.hpp"
#include "acrst/logging.hpp"
#include "acrst/rebalance.hpp"
#include "oracles/oracles.hpp"

using namespace acrst;

namespace {

struct MuteLog {
  std::vector<std::string> seen;
  MuteLog() {
    set_log_sink([this](std::string_view m) { seen.emplace_back(m); });
  }
  ~MuteLog() { set_log_sink(nullptr); }
};

BBox int_box(Rng& rng, int extent) {
  const int x = static_cast<int>(uniform_index(rng, extent - 1));
  const int y = static_cast<int>(uniform_index(rng, extent - 1));
  const int w = 1 + static_cast<int>(uniform_index(rng, extent - x));
  const int h = 1 + static_cast<int>(uniform_index(rng, extent - y));
  return BBox{double(x), double(y), double(std::min(w, extent - x)), double(std::min(h, extent - y))};
}

PastePlacement placed(const BBox& b, int cls = 1) {
  return PastePlacement{CropEntry{0, b, cls, 1.0, CropOrigin::labeled}, b, 1.0};
}

}  // namespace

TEST_CASE("pseudo_recall examples") {
  const auto pr = pseudo_recall({{8, 160}, {10, 40}, 4.0});
  CHECK(pr[0] == doctest::Approx(0.2));
  CHECK(pr[1] == doctest::Approx(1.0));

  const auto balanced = pseudo_recall({{6, 9, 3}, {2, 3, 1}, 3.0});
  for (double v : balanced) CHECK(v == doctest::Approx(1.0));

  CHECK(pseudo_recall({{0, 5}, {3, 5}, 1.0})[0] == 0.0);
  CHECK(pseudo_recall({{4, 5}, {0, 5}, 1.0})[0] == kAbsentClassRecall);
  CHECK_THROWS_AS(pseudo_recall({{1}, {1}, 0.0}), ArgumentError);
  CHECK_THROWS_AS(pseudo_recall({{1, 2}, {1}, 1.0}), ArgumentError);
}

TEST_CASE("affr_distribution worked example and degenerate inputs") {
  const std::vector<double> pr{0.2, 1.0};
  const auto d = affr_distribution(pr, 2.0);
  CHECK(d.mu[0] == doctest::Approx(0.961538).epsilon(1e-6));
  CHECK(d.mu[1] == doctest::Approx(0.038462).epsilon(1e-5));
  CHECK(d.beta == 2.0);

  const std::vector<double> equal{0.5, 0.5, 0.5, 0.5};
  for (double m : affr_distribution(equal, 2.0).mu) CHECK(m == doctest::Approx(0.25));

  const std::vector<double> skewed{0.1, 3.0, 0.7};
  for (double m : affr_distribution(skewed, 0.0).mu) CHECK(m == doctest::Approx(1.0 / 3));

  MuteLog log;
  const std::vector<double> zero{0.0, 0.0, 0.0};
  for (double m : affr_distribution(zero, 2.0).mu) CHECK(m == doctest::Approx(1.0 / 3));
  CHECK(log.seen.size() == 1);

  CHECK_THROWS_AS(affr_distribution(pr, -1.0), ArgumentError);
}

TEST_CASE("absent classes get the smallest sampling weight") {
  const std::vector<double> pr{0.3, kAbsentClassRecall, 0.9, 0.5};
  const auto mu = affr_distribution(pr, 2.0).mu;
  const double smallest = *std::min_element(mu.begin(), mu.end());
  CHECK(mu[1] == doctest::Approx(smallest));
  CHECK(mu[0] > mu[3]);
  CHECK(mu[3] > mu[2]);
}

TEST_CASE("affr_distribution matches the brute-force oracle") {
  Rng rng{31};
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 1 + uniform_index(rng, 12);
    ClassStats s;
    for (std::size_t i = 0; i < k; ++i) {
      s.pseudo_counts.push_back(static_cast<std::int64_t>(uniform_index(rng, 200)));
      s.labeled_counts.push_back(static_cast<std::int64_t>(uniform_index(rng, 30)));
    }
    s.ratio = uniform(rng, 0.5, 20.0);
    const double beta = uniform(rng, 0.0, 4.0);
    const auto pr = pseudo_recall(s);
    const auto ref_pr = oracle::pseudo_recall(s.pseudo_counts, s.labeled_counts, s.ratio);
    for (std::size_t i = 0; i < k; ++i) REQUIRE(std::abs(pr[i] - ref_pr[i]) <= 1e-12);

    MuteLog log;
    const auto mu = affr_distribution(pr, beta).mu;
    const auto ref = oracle::affr_mu(ref_pr, beta);
    for (std::size_t i = 0; i < k; ++i) REQUIRE(std::abs(mu[i] - ref[i]) <= 1e-12);
  }
}

TEST_CASE("affr_distribution properties") {
  Rng rng{8};
  for (int t = 0; t < 300; ++t) {
    const std::size_t k = 2 + uniform_index(rng, 8);
    // distinct values so monotonicity is strict
    std::vector<double> pr(k);
    for (std::size_t i = 0; i < k; ++i) pr[i] = 0.05 + 0.1 * double(i) + uniform(rng, 0.0, 0.04);
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = k - 1; i > 0; --i) std::swap(perm[i], perm[uniform_index(rng, i + 1)]);
    std::vector<double> shuffled(k);
    for (std::size_t i = 0; i < k; ++i) shuffled[i] = pr[perm[i]];

    const double beta = uniform(rng, 0.1, 3.0);
    const auto mu = affr_distribution(pr, beta).mu;
    const auto mu_shuffled = affr_distribution(shuffled, beta).mu;

    REQUIRE(std::abs(std::accumulate(mu.begin(), mu.end(), 0.0) - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < k; ++i) {
      REQUIRE(mu_shuffled[i] == doctest::Approx(mu[perm[i]]).epsilon(1e-12));
      for (std::size_t j = 0; j < k; ++j) {
        if (pr[i] < pr[j]) REQUIRE(mu[i] > mu[j]);
      }
    }
  }
}

TEST_CASE("visible_fraction examples") {
  const BBox inst{0, 0, 2, 2};
  const std::vector<BBox> same{inst};
  CHECK(visible_fraction(inst, same) == 0.0);
  const std::vector<BBox> disjoint{{5, 5, 1, 1}};
  CHECK(visible_fraction(inst, disjoint) == 1.0);
  const std::vector<BBox> two{{0, 0, 1, 2}, {1, 0, 1, 1}};
  CHECK(visible_fraction(inst, two) == doctest::Approx(0.25));
  CHECK(visible_fraction(inst, {}) == 1.0);
  CHECK_THROWS_AS(visible_fraction(BBox{0, 0, 0, 1}, {}), ArgumentError);
}

TEST_CASE("visible_fraction agrees with the raster oracle") {
  Rng rng{99};
  for (int t = 0; t < 1000; ++t) {
    const BBox inst = int_box(rng, 24);
    std::vector<BBox> occ;
    const std::size_t n = uniform_index(rng, 6);
    for (std::size_t i = 0; i < n; ++i) occ.push_back(int_box(rng, 24));
    REQUIRE(std::abs(visible_fraction(inst, occ) - oracle::raster_visible(inst, occ)) <= 1e-9);
  }
}

TEST_CASE("merge_annotations threshold semantics") {
  const std::vector<Instance> base{{1, {0, 0, 10, 10}, 7}};
  // covers 40% of the base instance
  const std::vector<PastePlacement> partial{placed({0, 0, 4, 10}, 2)};
  CHECK(merge_annotations(base, partial, 0.3).size() == 2);
  CHECK(merge_annotations(base, partial, 0.7).size() == 1);

  const std::vector<PastePlacement> full{placed({0, 0, 10, 10}, 2)};
  for (double thr : {0.0, 0.3, 1.0}) {
    const auto out = merge_annotations(base, full, thr);
    REQUIRE(out.size() == 1);
    CHECK(out[0].pasted);
  }

  const auto identity = merge_annotations(base, {}, 0.5);
  REQUIRE(identity.size() == 1);
  CHECK(identity[0].instance == base[0]);
  CHECK(identity[0].visibility == 1.0);

  CHECK_THROWS_AS(merge_annotations(base, {}, 1.5), ArgumentError);
}

TEST_CASE("later pastes occlude earlier ones but pasted objects stay") {
  const std::vector<PastePlacement> pasted{placed({0, 0, 10, 10}, 1), placed({0, 0, 10, 10}, 2)};
  const auto out = merge_annotations({}, pasted, 0.5);
  REQUIRE(out.size() == 2);
  CHECK(out[0].visibility == 0.0);
  CHECK(out[1].visibility == 1.0);
}

TEST_CASE("merge_annotations drops exactly what the oracle flags") {
  Rng rng{4242};
  for (int t = 0; t < 1000; ++t) {
    std::vector<Instance> base;
    for (std::size_t i = 0, n = uniform_index(rng, 5); i < n; ++i) {
      base.push_back({1, int_box(rng, 20), 1});
    }
    std::vector<PastePlacement> pasted;
    std::vector<BBox> rects;
    for (std::size_t i = 0, n = uniform_index(rng, 4); i < n; ++i) {
      rects.push_back(int_box(rng, 20));
      pasted.push_back(placed(rects.back()));
    }
    for (double thr : {0.0, 0.3, 0.7}) {
      const auto out = merge_annotations(base, pasted, thr);
      std::vector<Instance> expected;
      for (const auto& b : base) {
        const double v = oracle::raster_visible(b.bbox, rects);
        if (v > 0.0 && v >= thr) expected.push_back(b);
      }
      std::vector<Instance> kept;
      for (const auto& m : out) {
        if (!m.pasted) kept.push_back(m.instance);
      }
      REQUIRE(kept == expected);
      REQUIRE(out.size() - kept.size() == pasted.size());
    }
  }
}

TEST_CASE("fbr_mix placements and counts") {
  const ImageRecord empty{1, 200, 100, {}};
  const std::vector<CropEntry> crops{{5, {0, 0, 30, 20}, 2, 1.0, CropOrigin::labeled},
                                     {6, {0, 0, 10, 40}, 3, 0.9, CropOrigin::pseudo}};
  Rng a{1}, b{1};
  const PasteConfig cfg;
  const MixedRecord m = fbr_mix(empty, crops, a, cfg);
  REQUIRE(m.placements.size() == 2);
  REQUIRE(m.merged_annotations.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& p = m.placements[i];
    CHECK(p.target_bbox.within(200, 100));
    CHECK(p.target_bbox.w == crops[i].bbox.w);
    CHECK(p.target_bbox.h == crops[i].bbox.h);
    CHECK(m.merged_annotations[i].instance.bbox == p.target_bbox);
    CHECK(m.merged_annotations[i].instance.class_id == crops[i].class_id);
  }
  const MixedRecord again = fbr_mix(empty, crops, b, cfg);
  CHECK(again.placements[0].target_bbox == m.placements[0].target_bbox);
  CHECK(again.placements[1].target_bbox == m.placements[1].target_bbox);

  const ImageRecord busy{2, 200, 100, {{1, {10, 10, 20, 20}, 2}, {4, {50, 50, 10, 10}, 2}}};
  Rng c{3};
  const MixedRecord none = fbr_mix(busy, {}, c, cfg);
  CHECK(none.placements.empty());
  REQUIRE(none.merged_annotations.size() == 2);
  CHECK(none.merged_annotations[0].instance == busy.ground_truth[0]);
}

TEST_CASE("fbr_mix count invariant over random records") {
  Rng rng{17};
  const PasteConfig cfg;
  for (int t = 0; t < 200; ++t) {
    ImageRecord rec{t, 64, 48, {}};
    for (std::size_t i = 0, n = uniform_index(rng, 5); i < n; ++i) {
      rec.ground_truth.push_back({1, int_box(rng, 40), t});
    }
    std::vector<CropEntry> crops;
    for (std::size_t i = 0, n = uniform_index(rng, 4); i < n; ++i) {
      crops.push_back({0, int_box(rng, 40), 2, 1.0, CropOrigin::labeled});
    }
    const MixedRecord m = fbr_mix(rec, crops, rng, cfg);
    CHECK(m.merged_annotations.size() ==
          rec.ground_truth.size() + m.placements.size() - m.dropped_base());
    CHECK(m.merged_annotations.size() >= m.placements.size());
  }
}

TEST_CASE("oversized crops are rescaled into range or skipped") {
  MuteLog log;
  const ImageRecord rec{1, 100, 50, {}};
  const std::vector<CropEntry> big{{0, {0, 0, 400, 100}, 1, 1.0, CropOrigin::labeled}};
  Rng rng{11};
  const MixedRecord m = fbr_mix(rec, big, rng, PasteConfig{});
  REQUIRE(m.placements.size() == 1);
  const auto& p = m.placements[0];
  CHECK(p.target_bbox.within(100, 50));
  CHECK(std::max(p.target_bbox.w, p.target_bbox.h) >= 0.5 * 50 - 1e-9);
  CHECK(std::max(p.target_bbox.w, p.target_bbox.h) <= 1.0 * 50 + 1e-9);
  CHECK(p.target_bbox.w / p.target_bbox.h == doctest::Approx(4.0));

  // even the smallest rescale cannot fit a very long crop into a narrow image
  const ImageRecord thin{2, 100, 10, {}};
  const std::vector<CropEntry> tall{{0, {0, 0, 10, 400}, 1, 1.0, CropOrigin::labeled}};
  PasteConfig cfg;
  cfg.rescale_min = 2.0;
  cfg.rescale_max = 2.0;
  const MixedRecord skipped = fbr_mix(thin, tall, rng, cfg);
  CHECK(skipped.placements.empty());
  CHECK(skipped.skipped_crops == 1);
  CHECK(log.seen.size() == 1);
}

TEST_CASE("paste config validation") {
  PasteConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.rescale_min = 0.0;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  cfg = PasteConfig{};
  cfg.beta = -0.5;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
  cfg = PasteConfig{};
  cfg.crops_per_image = -1;
  CHECK_THROWS_AS(validate(cfg), ArgumentError);
}
