#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace covermodal {

// One record per item: a fixed-width visual feature vector, the raw text
// extracted for the item, token ids once a vocabulary has been applied, and
// an integer class label.
struct Sample {
  std::string id;
  std::vector<double> visual;
  std::string text;
  std::vector<int> tokens;
  int label = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;
  int visual_dim = 0;

  int n_classes() const { return static_cast<int>(class_names.size()); }
  std::size_t size() const { return samples.size(); }
};

// Token table with ids 1..V assigned in descending-frequency order (ties
// broken lexicographically); id 0 is reserved for unknown tokens.
struct Vocabulary {
  static constexpr int kUnkId = 0;

  int min_count = 1;
  std::map<std::string, int> token_to_id;
  std::vector<std::string> id_to_token{"<unk>"};

  int size() const { return static_cast<int>(token_to_id.size()); }  // V
  int table_rows() const { return size() + 1; }                      // V + 1, row 0 = unk

  int lookup(const std::string& tok) const {
    auto it = token_to_id.find(tok);
    return it == token_to_id.end() ? kUnkId : it->second;
  }
  const std::string& token(int id) const;  // decode; id in [0, V]
};

struct SplitSpec {
  std::array<double, 3> ratios{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
};

struct DatasetSplits {
  Dataset train, val, test;
};

struct SyntheticSpec {
  int n_per_class = 100;
  int factor_a = 2;  // cardinality of the factor carried by the visual view
  int factor_b = 2;  // cardinality of the factor carried by the text view
  double noise_sd = 0.0;
  double inconsistent_fraction = 0.0;  // fraction whose text factor is resampled
  std::uint64_t seed = 0;
};

// Lowercases and splits on maximal runs of non-alphanumeric characters.
std::vector<std::string> tokenize(const std::string& raw);

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus, int min_count);

std::vector<int> encode_text(const std::string& raw, const Vocabulary& vocab);

// Fills tokens on every sample from its raw text.
void encode_dataset(Dataset& ds, const Vocabulary& vocab);

// Seeded shuffle, then cuts at floor(n*r1) and floor(n*(r1+r2)); the three
// parts partition the input exactly and the same seed reproduces them.
DatasetSplits split_dataset(const Dataset& ds, const SplitSpec& spec);

// Manifest CSV (id,label_index,label_name,text with a "# classes:" comment
// line) paired row-by-row with a CMFV binary feature file.
Dataset load_manifest(const std::string& manifest_path, const std::string& features_path);
void save_dataset(const Dataset& ds, const std::string& manifest_path,
                  const std::string& features_path);

// Factorized two-view toy data: the class is the pair (a, b), the visual
// view encodes only a and the text view encodes only b, so either view alone
// caps at one factor while the fused views identify the class. Classes are
// exactly balanced and generation is reproducible bit for bit per seed.
Dataset generate_synthetic(const SyntheticSpec& spec);

std::string vocabulary_to_text(const Vocabulary& vocab);
Vocabulary vocabulary_from_text(const std::string& text, int min_count);
void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path, int min_count = 1);

}  // namespace covermodal
