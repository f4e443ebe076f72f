#include "sje/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sje {
namespace {

using nlohmann::json;

double parse_double(const std::string& token, const std::string& where) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw DatasetError("bad number '" + token + "' in " + where);
  }
  return value;
}

int parse_int(const std::string& token, const std::string& where) {
  int value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw DatasetError("bad integer '" + token + "' in " + where);
  }
  return value;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(sep, start);
    if (end == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path);
  return in;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write " + path);
  return out;
}

// Reads lines, tolerating a trailing newline; skips fully empty lines.
std::vector<std::string> read_lines(const std::string& path) {
  auto in = open_for_read(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void check_disjoint(const std::vector<int>& a, const std::vector<int>& b,
                    const std::string& name_a, const std::string& name_b) {
  std::set<int> sa(a.begin(), a.end());
  for (int c : b) {
    if (sa.count(c)) {
      throw DatasetError("class " + std::to_string(c) + " appears in both " +
                         name_a + " and " + name_b + " splits");
    }
  }
}

}  // namespace

int ClassSplitDataset::feature_dim() const {
  return images.empty() ? 0 : static_cast<int>(images.front().vector.size());
}

int ClassSplitDataset::attribute_dim() const {
  return attributes.empty() ? 0
                            : static_cast<int>(attributes.front().values.size());
}

std::vector<int> ClassSplitDataset::all_class_ids() const {
  std::set<int> ids;
  ids.insert(splits.train.begin(), splits.train.end());
  ids.insert(splits.val.begin(), splits.val.end());
  ids.insert(splits.test.begin(), splits.test.end());
  return std::vector<int>(ids.begin(), ids.end());
}

void ClassSplitDataset::validate() const {
  check_disjoint(splits.train, splits.val, "train", "val");
  check_disjoint(splits.train, splits.test, "train", "test");
  check_disjoint(splits.val, splits.test, "val", "test");
  for (const auto* split : {&splits.train, &splits.val, &splits.test}) {
    std::set<int> seen;
    for (int c : *split) {
      if (!seen.insert(c).second) {
        throw DatasetError("class " + std::to_string(c) +
                           " listed twice within one split");
      }
    }
  }
  if (splits.train.empty()) throw DatasetError("train split is empty");

  const auto classes = all_class_ids();
  const std::set<int> class_set(classes.begin(), classes.end());

  if (images.empty()) throw DatasetError("dataset has no images");
  const int dim = feature_dim();
  std::map<int, int> image_class;
  std::set<int> classes_with_images;
  for (const auto& img : images) {
    if (static_cast<int>(img.vector.size()) != dim) {
      throw DatasetError("image " + std::to_string(img.image_id) + " has " +
                         std::to_string(img.vector.size()) +
                         " features, expected " + std::to_string(dim));
    }
    if (!class_set.count(img.class_id)) {
      throw DatasetError("image " + std::to_string(img.image_id) +
                         " references class " + std::to_string(img.class_id) +
                         " missing from splits.json");
    }
    if (!image_class.emplace(img.image_id, img.class_id).second) {
      throw DatasetError("duplicate image id " + std::to_string(img.image_id));
    }
    classes_with_images.insert(img.class_id);
  }

  if (captions.empty()) throw DatasetError("dataset has no captions");
  std::set<int> classes_with_captions;
  for (const auto& cap : captions) {
    auto it = image_class.find(cap.image_id);
    if (it == image_class.end()) {
      throw DatasetError("caption references unknown image id " +
                         std::to_string(cap.image_id));
    }
    if (it->second != cap.class_id) {
      throw DatasetError("caption for image " + std::to_string(cap.image_id) +
                         " claims class " + std::to_string(cap.class_id) +
                         " but the image has class " +
                         std::to_string(it->second));
    }
    classes_with_captions.insert(cap.class_id);
  }

  for (int c : classes) {
    if (!classes_with_images.count(c)) {
      throw DatasetError("class " + std::to_string(c) + " has no images");
    }
    if (!classes_with_captions.count(c)) {
      throw DatasetError("class " + std::to_string(c) + " has no captions");
    }
  }

  if (!attributes.empty()) {
    const int adim = attribute_dim();
    std::set<int> attr_classes;
    for (const auto& attr : attributes) {
      if (static_cast<int>(attr.values.size()) != adim) {
        throw DatasetError("attribute vector for class " +
                           std::to_string(attr.class_id) + " has " +
                           std::to_string(attr.values.size()) +
                           " entries, expected " + std::to_string(adim));
      }
      if (!attr_classes.insert(attr.class_id).second) {
        throw DatasetError("duplicate attribute vector for class " +
                           std::to_string(attr.class_id));
      }
    }
    for (int c : classes) {
      if (!attr_classes.count(c)) {
        throw DatasetError("class " + std::to_string(c) +
                           " has no attribute vector");
      }
    }
  }

  if (!word_vectors.empty()) {
    const std::size_t wdim = word_vectors.begin()->second.size();
    for (const auto& [word, vec] : word_vectors) {
      if (vec.size() != wdim) {
        throw DatasetError("word vector for '" + word + "' has " +
                           std::to_string(vec.size()) +
                           " entries, expected " + std::to_string(wdim));
      }
    }
  }
}

DatasetIndex::DatasetIndex(const ClassSplitDataset& dataset)
    : dataset_(&dataset) {
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    images_by_class_[dataset.images[i].class_id].push_back(
        static_cast<int>(i));
  }
  for (std::size_t i = 0; i < dataset.captions.size(); ++i) {
    captions_by_class_[dataset.captions[i].class_id].push_back(
        static_cast<int>(i));
    captions_by_image_[dataset.captions[i].image_id].push_back(
        static_cast<int>(i));
  }
  for (std::size_t i = 0; i < dataset.attributes.size(); ++i) {
    attribute_row_[dataset.attributes[i].class_id] = static_cast<int>(i);
  }
}

const std::vector<int>& DatasetIndex::image_rows(int class_id) const {
  auto it = images_by_class_.find(class_id);
  if (it == images_by_class_.end()) {
    throw DatasetError("no images for class " + std::to_string(class_id));
  }
  return it->second;
}

const std::vector<int>& DatasetIndex::caption_rows(int class_id) const {
  auto it = captions_by_class_.find(class_id);
  if (it == captions_by_class_.end()) {
    throw DatasetError("no captions for class " + std::to_string(class_id));
  }
  return it->second;
}

const std::vector<int>& DatasetIndex::caption_rows_of_image(
    int image_id) const {
  auto it = captions_by_image_.find(image_id);
  if (it == captions_by_image_.end()) {
    throw DatasetError("no captions for image " + std::to_string(image_id));
  }
  return it->second;
}

const AttributeVector& DatasetIndex::attributes_of(int class_id) const {
  auto it = attribute_row_.find(class_id);
  if (it == attribute_row_.end()) {
    throw DatasetError("no attribute vector for class " +
                       std::to_string(class_id));
  }
  return dataset_->attributes[static_cast<std::size_t>(it->second)];
}

ClassSplitDataset load_dataset(const std::string& root) {
  namespace fs = std::filesystem;
  ClassSplitDataset ds;

  const std::string features_path = root + "/features.csv";
  for (const auto& line : read_lines(features_path)) {
    auto fields = split(line, ',');
    if (fields.size() < 3) {
      throw DatasetError("features.csv line needs image_id, class_id and at "
                         "least one feature: '" + line + "'");
    }
    ImageFeature img;
    img.image_id = parse_int(fields[0], features_path);
    img.class_id = parse_int(fields[1], features_path);
    img.vector.reserve(fields.size() - 2);
    for (std::size_t i = 2; i < fields.size(); ++i) {
      img.vector.push_back(parse_double(fields[i], features_path));
    }
    ds.images.push_back(std::move(img));
  }

  const std::string captions_path = root + "/captions.tsv";
  for (const auto& line : read_lines(captions_path)) {
    std::size_t t1 = line.find('\t');
    std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw DatasetError("captions.tsv line needs image_id<TAB>class_id<TAB>"
                         "text: '" + line + "'");
    }
    Caption cap;
    cap.image_id = parse_int(line.substr(0, t1), captions_path);
    cap.class_id = parse_int(line.substr(t1 + 1, t2 - t1 - 1), captions_path);
    cap.raw_text = line.substr(t2 + 1);
    ds.captions.push_back(std::move(cap));
  }

  const std::string splits_path = root + "/splits.json";
  json j;
  try {
    open_for_read(splits_path) >> j;
  } catch (const json::exception& e) {
    throw DatasetError("cannot parse " + splits_path + ": " + e.what());
  }
  for (const char* key : {"train", "val", "test"}) {
    if (!j.contains(key) || !j[key].is_array()) {
      throw DatasetError(splits_path + " must contain a '" +
                         std::string(key) + "' array");
    }
  }
  ds.splits.train = j["train"].get<std::vector<int>>();
  ds.splits.val = j["val"].get<std::vector<int>>();
  ds.splits.test = j["test"].get<std::vector<int>>();

  const std::string attributes_path = root + "/attributes.csv";
  if (fs::exists(attributes_path)) {
    for (const auto& line : read_lines(attributes_path)) {
      auto fields = split(line, ',');
      if (fields.size() < 2) {
        throw DatasetError("attributes.csv line needs class_id and at least "
                           "one value: '" + line + "'");
      }
      AttributeVector attr;
      attr.class_id = parse_int(fields[0], attributes_path);
      for (std::size_t i = 1; i < fields.size(); ++i) {
        attr.values.push_back(parse_double(fields[i], attributes_path));
      }
      ds.attributes.push_back(std::move(attr));
    }
  }

  const std::string wordvecs_path = root + "/wordvecs.txt";
  if (fs::exists(wordvecs_path)) {
    ds.word_vectors = load_word_vectors(wordvecs_path);
  }

  ds.validate();
  return ds;
}

void save_dataset(const ClassSplitDataset& dataset, const std::string& root) {
  dataset.validate();
  std::filesystem::create_directories(root);

  auto features = open_for_write(root + "/features.csv");
  for (const auto& img : dataset.images) {
    features << img.image_id << ',' << img.class_id;
    for (double v : img.vector) features << ',' << fmt_double(v);
    features << '\n';
  }

  auto captions = open_for_write(root + "/captions.tsv");
  for (const auto& cap : dataset.captions) {
    if (cap.raw_text.find('\t') != std::string::npos ||
        cap.raw_text.find('\n') != std::string::npos) {
      throw DatasetError("caption for image " + std::to_string(cap.image_id) +
                         " contains a tab or newline and cannot be saved");
    }
    captions << cap.image_id << '\t' << cap.class_id << '\t' << cap.raw_text
             << '\n';
  }

  json j;
  j["train"] = dataset.splits.train;
  j["val"] = dataset.splits.val;
  j["test"] = dataset.splits.test;
  open_for_write(root + "/splits.json") << j.dump(2) << '\n';

  if (dataset.has_attributes()) {
    auto attrs = open_for_write(root + "/attributes.csv");
    for (const auto& attr : dataset.attributes) {
      attrs << attr.class_id;
      for (double v : attr.values) attrs << ',' << fmt_double(v);
      attrs << '\n';
    }
  }

  if (dataset.has_word_vectors()) {
    save_word_vectors(dataset.word_vectors, root + "/wordvecs.txt");
  }
}

WordVectorTable load_word_vectors(const std::string& path) {
  WordVectorTable table;
  std::size_t dim = 0;
  for (const auto& line : read_lines(path)) {
    auto fields = split(line, ' ');
    if (fields.size() < 2) {
      throw DatasetError("word vector line needs a word and at least one "
                         "value: '" + line + "'");
    }
    std::vector<double> vec;
    vec.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      vec.push_back(parse_double(fields[i], path));
    }
    if (table.empty()) {
      dim = vec.size();
    } else if (vec.size() != dim) {
      throw DatasetError("word vector for '" + fields[0] + "' has " +
                         std::to_string(vec.size()) + " values, expected " +
                         std::to_string(dim));
    }
    if (!table.emplace(fields[0], std::move(vec)).second) {
      throw DatasetError("duplicate word vector for '" + fields[0] + "'");
    }
  }
  return table;
}

void save_word_vectors(const WordVectorTable& table, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& [word, vec] : table) {
    out << word;
    for (double v : vec) out << ' ' << fmt_double(v);
    out << '\n';
  }
}

std::vector<double> word_vector_or_zero(const WordVectorTable& table,
                                        const std::string& word) {
  auto it = table.find(word);
  if (it != table.end()) return it->second;
  return std::vector<double>(static_cast<std::size_t>(word_vector_dim(table)),
                             0.0);
}

int word_vector_dim(const WordVectorTable& table) {
  return table.empty() ? 0 : static_cast<int>(table.begin()->second.size());
}

}  // namespace sje
