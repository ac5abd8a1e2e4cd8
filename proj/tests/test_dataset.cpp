#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>

#include "acrst/dataset.hpp"
#include "acrst/error.hpp"
#include "acrst/synthetic.hpp"

using namespace acrst;

namespace {

const char* kFixture = R"({
  "info": {"ignored": true},
  "images": [
    {"id": 10, "width": 100, "height": 80, "file_name": "a.jpg"},
    {"id": 11, "width": 50, "height": 50}
  ],
  "annotations": [
    {"id": 1, "image_id": 10, "category_id": 7, "bbox": [0, 0, 10, 10]},
    {"id": 2, "image_id": 10, "category_id": 3, "bbox": [20, 20, 30, 40]},
    {"id": 3, "image_id": 11, "category_id": 7, "bbox": [5.5, 5, 10, 10.25]}
  ],
  "categories": [{"id": 7, "name": "person"}, {"id": 3, "name": "car"}]
})";

std::string with_annotation(const std::string& ann) {
  return R"({"images": [{"id": 1, "width": 10, "height": 10}], "categories": [{"id": 1, "name": "a"}],
            "annotations": [)" + ann + "]}";
}

Dataset numbered(int n) {
  Dataset ds;
  ds.categories = {{1, "a"}, {2, "b"}};
  for (int i = 0; i < n; ++i) {
    ds.images.push_back(ImageRecord{i, 100, 100, {Instance{1 + i % 2, BBox{0, 0, 5, 5}, i}}});
    ds.labeled.push_back(true);
  }
  return ds;
}

}  // namespace

TEST_CASE("parse_coco_annotations reads the fixture and remaps categories") {
  const Dataset ds = parse_coco_annotations(kFixture);
  REQUIRE(ds.size() == 2);
  CHECK(ds.num_classes() == 2);
  CHECK(ds.categories[0] == Category{7, "person"});
  CHECK(ds.categories[1] == Category{3, "car"});
  CHECK(ds.images[0].ground_truth.size() == 2);
  CHECK(ds.images[0].ground_truth[1].class_id == 2);
  CHECK(ds.images[1].ground_truth[0].bbox == BBox{5.5, 5, 10, 10.25});
  CHECK(ds.num_labeled() == 2);
  CHECK(class_counts(ds, false) == std::vector<std::int64_t>{2, 1});
}

TEST_CASE("parse_coco_annotations accepts an empty document") {
  const Dataset ds = parse_coco_annotations(R"({"images": [], "annotations": [], "categories": []})");
  CHECK(ds.num_labeled() + ds.num_unlabeled() == 0);
}

TEST_CASE("parse errors carry a location") {
  try {
    parse_coco_annotations(R"({"images": [}")");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
  try {
    parse_coco_annotations(R"({"images": [{"id": 1, "width": 10}], "annotations": [], "categories": []})");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("images[0]") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_coco_annotations("[1, 2]"), ParseError);
}

TEST_CASE("validation errors name the offending ids") {
  const auto message = [](const std::string& doc) {
    try {
      parse_coco_annotations(doc);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message(with_annotation(R"({"id": 42, "image_id": 1, "category_id": 1, "bbox": [0, 0, 0, 3]})"))
            .find("42") != std::string::npos);
  CHECK(message(with_annotation(R"({"id": 5, "image_id": 9, "category_id": 1, "bbox": [0, 0, 1, 1]})"))
            .find("unknown image 9") != std::string::npos);
  CHECK(message(with_annotation(R"({"id": 5, "image_id": 1, "category_id": 4, "bbox": [0, 0, 1, 1]})"))
            .find("unknown category 4") != std::string::npos);
  CHECK(message(with_annotation(R"({"id": 6, "image_id": 1, "category_id": 1, "bbox": [5, 5, 6, 1]})"))
            .find("outside") != std::string::npos);
}

TEST_CASE("serialize then parse round-trips") {
  const Dataset ds = parse_coco_annotations(kFixture);
  CHECK(parse_coco_annotations(serialize_coco(ds)) == ds);

  const Dataset syn = make_synthetic_dataset(SyntheticConfig{});
  CHECK(parse_coco_annotations(serialize_coco(syn)) == syn);
}

TEST_CASE("split_standard counts, disjointness and determinism") {
  const Dataset ds = numbered(100);
  const auto [lab, unl] = split_standard(ds, 0.10, 7);
  CHECK(lab.size() == 10);
  CHECK(unl.size() == 90);
  CHECK(lab.num_labeled() == 10);
  CHECK(unl.num_labeled() == 0);

  std::set<ImageId> ids;
  for (const auto& r : lab.images) ids.insert(r.id);
  for (const auto& r : unl.images) CHECK(ids.insert(r.id).second);
  CHECK(ids.size() == 100);

  const auto again = split_standard(ds, 0.10, 7);
  CHECK(again.first == lab);
  CHECK(again.second == unl);

  CHECK_THROWS_AS(split_standard(ds, 1.0, 7), ArgumentError);
  CHECK_THROWS_AS(split_standard(ds, 0.0, 7), ArgumentError);
  CHECK_THROWS_AS(split_standard(Dataset{}, 0.5, 7), ArgumentError);
}

TEST_CASE("split is a partition for many seeds and counts add up") {
  const Dataset ds = make_synthetic_dataset(SyntheticConfig{});
  const auto total = class_counts(ds, false);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto [lab, unl] = split_standard(ds, 0.25, seed);
    CHECK(lab.size() + unl.size() == ds.size());
    const auto a = class_counts(lab, false);
    const auto b = class_counts(unl, false);
    for (std::size_t k = 0; k < total.size(); ++k) CHECK(a[k] + b[k] == total[k]);
  }
}

TEST_CASE("training_view hides unlabeled ground truth only") {
  const Dataset ds = numbered(20);
  const auto [lab, unl] = split_standard(ds, 0.5, 3);
  const Dataset view = unl.training_view();
  for (const auto& r : view.images) CHECK(r.ground_truth.empty());
  CHECK(unl.num_instances() == 10);
  CHECK(lab.training_view() == lab);
}

TEST_CASE("class_counts edge cases") {
  Dataset empty;
  empty.categories = {{1, "a"}, {2, "b"}, {3, "c"}};
  CHECK(class_counts(empty, false) == std::vector<std::int64_t>{0, 0, 0});

  Dataset ds = parse_coco_annotations(kFixture);
  const auto before = class_counts(ds, false);
  std::reverse(ds.images.begin(), ds.images.end());
  CHECK(class_counts(ds, false) == before);

  ds.labeled[0] = false;
  const auto lab_only = class_counts(ds, true);
  CHECK(lab_only[0] + lab_only[1] == 2);
}

TEST_CASE("synthetic generator is skewed, valid and deterministic") {
  SyntheticConfig cfg;
  const Dataset a = make_synthetic_dataset(cfg);
  CHECK(a == make_synthetic_dataset(cfg));
  CHECK(a.size() == 200);
  CHECK(a.num_classes() == 10);
  for (const auto& r : a.images) {
    CHECK(r.ground_truth.size() >= 1);
    CHECK(r.ground_truth.size() <= 6);
    for (const auto& g : r.ground_truth) CHECK(g.bbox.within(r.width, r.height));
  }
  const auto counts = class_counts(a, false);
  CHECK(counts.front() > 3 * counts.back());
}
