#include "acrst/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "acrst/error.hpp"
#include "acrst/random.hpp"
#include "json.hpp"

namespace acrst {

using nlohmann::json;

std::size_t Dataset::num_labeled() const noexcept {
  return static_cast<std::size_t>(std::count(labeled.begin(), labeled.end(), true));
}

std::size_t Dataset::num_instances() const noexcept {
  std::size_t n = 0;
  for (const auto& img : images) n += img.ground_truth.size();
  return n;
}

Dataset Dataset::training_view() const {
  Dataset view = *this;
  for (std::size_t i = 0; i < view.images.size(); ++i) {
    if (!view.labeled[i]) view.images[i].ground_truth.clear();
  }
  return view;
}

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing key \"" + key + "\"");
  return *it;
}

template <typename T>
T get_as(const json& value, const std::string& where) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

}  // namespace

Dataset parse_coco_annotations(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("top level: expected an object");

  const json& images = require(doc, "images", "top level");
  const json& annotations = require(doc, "annotations", "top level");
  const json& categories = require(doc, "categories", "top level");
  if (!images.is_array() || !annotations.is_array() || !categories.is_array()) {
    throw ParseError("top level: images, annotations and categories must be arrays");
  }

  Dataset ds;
  std::map<std::int64_t, int> class_of;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const std::string where = "categories[" + std::to_string(i) + "]";
    const auto id = get_as<std::int64_t>(require(categories[i], "id", where), where);
    const auto name = get_as<std::string>(require(categories[i], "name", where), where);
    if (!class_of.emplace(id, static_cast<int>(ds.categories.size()) + 1).second) {
      throw ValidationError("duplicate category id " + std::to_string(id));
    }
    ds.categories.push_back({id, name});
  }

  std::map<ImageId, std::size_t> slot_of;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    ImageRecord rec;
    rec.id = get_as<ImageId>(require(images[i], "id", where), where);
    rec.width = get_as<double>(require(images[i], "width", where), where);
    rec.height = get_as<double>(require(images[i], "height", where), where);
    if (!(rec.width > 0.0) || !(rec.height > 0.0)) {
      throw ValidationError("image " + std::to_string(rec.id) + " has non-positive size");
    }
    if (!slot_of.emplace(rec.id, ds.images.size()).second) {
      throw ValidationError("duplicate image id " + std::to_string(rec.id));
    }
    ds.images.push_back(std::move(rec));
  }
  ds.labeled.assign(ds.images.size(), true);

  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const std::string where = "annotations[" + std::to_string(i) + "]";
    const json& ann = annotations[i];
    const auto ann_id = get_as<std::int64_t>(require(ann, "id", where), where);
    const auto image_id = get_as<ImageId>(require(ann, "image_id", where), where);
    const auto cat_id = get_as<std::int64_t>(require(ann, "category_id", where), where);
    const auto box = get_as<std::vector<double>>(require(ann, "bbox", where), where);
    if (box.size() != 4) throw ParseError(where + ": bbox must have 4 numbers");

    const auto img = slot_of.find(image_id);
    if (img == slot_of.end()) {
      throw ValidationError("annotation " + std::to_string(ann_id) + " references unknown image " +
                            std::to_string(image_id));
    }
    const auto cls = class_of.find(cat_id);
    if (cls == class_of.end()) {
      throw ValidationError("annotation " + std::to_string(ann_id) +
                            " references unknown category " + std::to_string(cat_id));
    }
    const BBox b{box[0], box[1], box[2], box[3]};
    if (!b.valid()) {
      throw ValidationError("annotation " + std::to_string(ann_id) + " has non-positive box extent");
    }
    ImageRecord& rec = ds.images[img->second];
    if (!b.within(rec.width, rec.height)) {
      throw ValidationError("annotation " + std::to_string(ann_id) + " lies outside image " +
                            std::to_string(image_id));
    }
    rec.ground_truth.push_back(Instance{cls->second, b, rec.id});
  }
  return ds;
}

std::string serialize_coco(const Dataset& dataset) {
  json doc;
  doc["images"] = json::array();
  doc["annotations"] = json::array();
  doc["categories"] = json::array();
  for (const auto& c : dataset.categories) {
    doc["categories"].push_back({{"id", c.source_id}, {"name", c.name}});
  }
  std::int64_t ann_id = 1;
  for (const auto& img : dataset.images) {
    doc["images"].push_back({{"id", img.id}, {"width", img.width}, {"height", img.height}});
    for (const auto& inst : img.ground_truth) {
      doc["annotations"].push_back(
          {{"id", ann_id++},
           {"image_id", img.id},
           {"category_id", dataset.categories.at(inst.class_id - 1).source_id},
           {"bbox", {inst.bbox.x, inst.bbox.y, inst.bbox.w, inst.bbox.h}}});
    }
  }
  return doc.dump(1);
}

std::pair<Dataset, Dataset> split_standard(const Dataset& dataset, double fraction,
                                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ArgumentError("split fraction must lie in (0,1), got " + std::to_string(fraction));
  }
  if (dataset.images.empty()) throw ArgumentError("cannot split an empty dataset");

  const std::size_t n = dataset.images.size();
  const auto n_labeled = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

  // Partial Fisher-Yates: the first n_labeled slots are the labeled sample.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng{seed};
  for (std::size_t i = 0; i < n_labeled; ++i) {
    std::swap(order[i], order[i + uniform_index(rng, n - i)]);
  }
  std::vector<bool> chosen(n, false);
  for (std::size_t i = 0; i < n_labeled; ++i) chosen[order[i]] = true;

  Dataset labeled;
  Dataset unlabeled;
  labeled.categories = unlabeled.categories = dataset.categories;
  for (std::size_t i = 0; i < n; ++i) {
    Dataset& dst = chosen[i] ? labeled : unlabeled;
    dst.images.push_back(dataset.images[i]);
    dst.labeled.push_back(chosen[i]);
  }
  return {std::move(labeled), std::move(unlabeled)};
}

std::vector<std::int64_t> class_counts(const Dataset& dataset, bool labeled_only) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(dataset.num_classes()), 0);
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    if (labeled_only && !dataset.labeled[i]) continue;
    for (const auto& inst : dataset.images[i].ground_truth) {
      if (inst.class_id >= 1 && inst.class_id <= dataset.num_classes()) ++counts[inst.class_id - 1];
    }
  }
  return counts;
}

}  // namespace acrst
