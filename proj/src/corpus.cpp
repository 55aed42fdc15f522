#include "covermodal/corpus.hpp"

#include "covermodal/fileio.hpp"
#include "covermodal/rng.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <stdexcept>

namespace covermodal {

namespace {

constexpr char kFeatureMagic[4] = {'C', 'M', 'F', 'V'};

const char* const kFillerWords[] = {"the", "a",    "of",    "and",   "in",
                                    "on",  "book", "cover", "story", "notes"};
constexpr std::size_t kFillerCount = sizeof(kFillerWords) / sizeof(kFillerWords[0]);

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    lines.push_back(cur);
  }
  return lines;
}

int parse_int_field(const std::string& field, const std::string& context) {
  int value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error(context + ": invalid integer '" + field + "'");
  }
  return value;
}

void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

struct ByteCursor {
  const std::string& bytes;
  std::size_t pos = 0;
  std::string context;

  const char* take(std::size_t n) {
    if (pos + n > bytes.size()) throw std::runtime_error(context + ": file truncated");
    const char* p = bytes.data() + pos;
    pos += n;
    return p;
  }
  std::uint32_t take_u32le() {
    const unsigned char* p = reinterpret_cast<const unsigned char*>(take(4));
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  float take_f32le() {
    const std::uint32_t bits = take_u32le();
    return std::bit_cast<float>(bits);
  }
  void expect_end() {
    if (pos != bytes.size()) throw std::runtime_error(context + ": trailing bytes after payload");
  }
};

void validate_dataset(const Dataset& ds, const std::string& context) {
  if (ds.class_names.empty()) throw std::runtime_error(context + ": empty class list");
  std::set<std::string> seen(ds.class_names.begin(), ds.class_names.end());
  if (seen.size() != ds.class_names.size()) {
    throw std::runtime_error(context + ": duplicate class names");
  }
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    if (s.label < 0 || s.label >= ds.n_classes()) {
      throw std::runtime_error(context + ": row " + std::to_string(i + 1) +
                               ": label out of range");
    }
    if (static_cast<int>(s.visual.size()) != ds.visual_dim) {
      throw std::runtime_error(context + ": row " + std::to_string(i + 1) +
                               ": visual width mismatch");
    }
    for (double v : s.visual) {
      if (!std::isfinite(v)) {
        throw std::runtime_error(context + ": row " + std::to_string(i + 1) +
                                 ": non-finite feature value");
      }
    }
  }
}

}  // namespace

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= static_cast<int>(id_to_token.size())) {
    throw std::invalid_argument("Vocabulary::token: id " + std::to_string(id) +
                                " out of range");
  }
  return id_to_token[id];
}

std::vector<std::string> tokenize(const std::string& raw) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char ch : raw) {
    const bool keep = ch >= 0x80 || std::isalnum(ch) != 0;
    if (keep) {
      cur.push_back(ch < 0x80 ? static_cast<char>(std::tolower(ch)) : static_cast<char>(ch));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus, int min_count) {
  if (min_count < 1) throw std::invalid_argument("build_vocabulary: min_count must be positive");
  if (corpus.empty()) throw std::invalid_argument("build_vocabulary: empty corpus");

  std::map<std::string, long> counts;
  for (const auto& seq : corpus) {
    for (const auto& tok : seq) ++counts[tok];
  }
  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [tok, count] : counts) {
    if (count >= min_count) kept.emplace_back(tok, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.min_count = min_count;
  for (const auto& [tok, count] : kept) {
    const int id = static_cast<int>(vocab.id_to_token.size());
    vocab.token_to_id.emplace(tok, id);
    vocab.id_to_token.push_back(tok);
    (void)count;
  }
  return vocab;
}

std::vector<int> encode_text(const std::string& raw, const Vocabulary& vocab) {
  std::vector<int> ids;
  for (const auto& tok : tokenize(raw)) ids.push_back(vocab.lookup(tok));
  return ids;
}

void encode_dataset(Dataset& ds, const Vocabulary& vocab) {
  for (Sample& s : ds.samples) s.tokens = encode_text(s.text, vocab);
}

DatasetSplits split_dataset(const Dataset& ds, const SplitSpec& spec) {
  if (ds.samples.empty()) throw std::invalid_argument("split_dataset: empty dataset");
  for (double r : spec.ratios) {
    if (r < 0.0) throw std::invalid_argument("split_dataset: negative ratio");
  }
  const double sum = spec.ratios[0] + spec.ratios[1] + spec.ratios[2];
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("split_dataset: ratios sum to " + format_double(sum) +
                                ", expected 1");
  }

  const std::size_t n = ds.samples.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(spec.seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(perm[i], perm[j]);
  }

  const double nd = static_cast<double>(n);
  const auto cut1 = static_cast<std::size_t>(std::floor(nd * spec.ratios[0]));
  const auto cut2 =
      static_cast<std::size_t>(std::floor(nd * (spec.ratios[0] + spec.ratios[1])));

  DatasetSplits out;
  for (Dataset* part : {&out.train, &out.val, &out.test}) {
    part->class_names = ds.class_names;
    part->visual_dim = ds.visual_dim;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = ds.samples[perm[i]];
    if (i < cut1) {
      out.train.samples.push_back(s);
    } else if (i < cut2) {
      out.val.samples.push_back(s);
    } else {
      out.test.samples.push_back(s);
    }
  }
  return out;
}

Dataset load_manifest(const std::string& manifest_path, const std::string& features_path) {
  const std::string text = read_file(manifest_path);
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty() || lines[0] != "id,label_index,label_name,text") {
    throw std::runtime_error("manifest " + manifest_path +
                             ": missing header 'id,label_index,label_name,text'");
  }

  Dataset ds;
  bool have_classes = false;
  std::size_t row = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string prefix = "# classes: ";
      if (line.rfind(prefix, 0) == 0) {
        std::string names = line.substr(prefix.size());
        std::size_t start = 0;
        while (true) {
          const std::size_t bar = names.find('|', start);
          ds.class_names.push_back(names.substr(start, bar - start));
          if (bar == std::string::npos) break;
          start = bar + 1;
        }
        have_classes = true;
      }
      continue;
    }
    ++row;
    if (!have_classes) {
      throw std::runtime_error("manifest " + manifest_path +
                               ": data row before '# classes:' comment");
    }
    const std::string rowctx = "manifest " + manifest_path + ": row " + std::to_string(row);
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    const std::size_t c3 = c2 == std::string::npos ? c2 : line.find(',', c2 + 1);
    if (c3 == std::string::npos) {
      throw std::runtime_error(rowctx + ": expected 4 comma-separated fields");
    }
    Sample s;
    s.id = line.substr(0, c1);
    const int label_index = parse_int_field(line.substr(c1 + 1, c2 - c1 - 1), rowctx);
    const std::string label_name = line.substr(c2 + 1, c3 - c2 - 1);
    s.text = line.substr(c3 + 1);
    if (label_index < 0 || label_index >= ds.n_classes()) {
      throw std::runtime_error(rowctx + ": label index " + std::to_string(label_index) +
                               " out of range");
    }
    if (ds.class_names[label_index] != label_name) {
      throw std::runtime_error(rowctx + ": label name '" + label_name +
                               "' does not match declared class list");
    }
    s.label = label_index;
    ds.samples.push_back(std::move(s));
  }
  if (!have_classes) {
    throw std::runtime_error("manifest " + manifest_path + ": missing '# classes:' comment");
  }

  const std::string bytes = read_file(features_path);
  ByteCursor cur{bytes, 0, "feature file " + features_path};
  const char* magic = cur.take(4);
  if (std::memcmp(magic, kFeatureMagic, 4) != 0) {
    throw std::runtime_error(cur.context + ": bad magic, expected CMFV");
  }
  const std::uint32_t n = cur.take_u32le();
  const std::uint32_t d_v = cur.take_u32le();
  if (n != ds.samples.size()) {
    throw std::runtime_error(cur.context + ": has " + std::to_string(n) +
                             " rows but manifest has " + std::to_string(ds.samples.size()));
  }
  ds.visual_dim = static_cast<int>(d_v);
  for (std::uint32_t i = 0; i < n; ++i) {
    Sample& s = ds.samples[i];
    s.visual.resize(d_v);
    for (std::uint32_t j = 0; j < d_v; ++j) {
      s.visual[j] = static_cast<double>(cur.take_f32le());
    }
  }
  cur.expect_end();

  validate_dataset(ds, "manifest " + manifest_path);
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& manifest_path,
                  const std::string& features_path) {
  validate_dataset(ds, "save_dataset");
  std::string manifest = "id,label_index,label_name,text\n# classes: ";
  for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
    const std::string& name = ds.class_names[c];
    if (name.empty() || name.find_first_of(",|\n") != std::string::npos) {
      throw std::invalid_argument("save_dataset: class name '" + name +
                                  "' not representable in manifest");
    }
    if (c > 0) manifest.push_back('|');
    manifest += name;
  }
  manifest.push_back('\n');
  for (const Sample& s : ds.samples) {
    if (s.id.find_first_of(",\n") != std::string::npos ||
        s.text.find('\n') != std::string::npos) {
      throw std::invalid_argument("save_dataset: sample '" + s.id +
                                  "' not representable in manifest");
    }
    manifest += s.id;
    manifest.push_back(',');
    manifest += std::to_string(s.label);
    manifest.push_back(',');
    manifest += ds.class_names[s.label];
    manifest.push_back(',');
    manifest += s.text;
    manifest.push_back('\n');
  }

  std::string features;
  features.append(kFeatureMagic, 4);
  put_u32le(features, static_cast<std::uint32_t>(ds.samples.size()));
  put_u32le(features, static_cast<std::uint32_t>(ds.visual_dim));
  for (const Sample& s : ds.samples) {
    for (double v : s.visual) {
      put_u32le(features, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }

  atomic_write_file(manifest_path, manifest);
  atomic_write_file(features_path, features);
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_per_class < 1) throw std::invalid_argument("generate_synthetic: n_per_class < 1");
  if (spec.factor_a < 2 || spec.factor_b < 2) {
    throw std::invalid_argument("generate_synthetic: both factors must be >= 2");
  }
  if (spec.noise_sd < 0.0) throw std::invalid_argument("generate_synthetic: negative noise_sd");
  if (spec.inconsistent_fraction < 0.0 || spec.inconsistent_fraction > 1.0) {
    throw std::invalid_argument("generate_synthetic: inconsistent_fraction outside [0,1]");
  }

  const int a_card = spec.factor_a;
  const int b_card = spec.factor_b;
  const int n_classes = a_card * b_card;
  const int d_v = a_card + 4;

  Dataset ds;
  ds.visual_dim = d_v;
  for (int a = 0; a < a_card; ++a) {
    for (int b = 0; b < b_card; ++b) {
      ds.class_names.push_back("a" + std::to_string(a) + "b" + std::to_string(b));
    }
  }

  Rng rng(spec.seed);
  long index = 0;
  for (int label = 0; label < n_classes; ++label) {
    const int a = label / b_card;
    const int b = label % b_card;
    for (int i = 0; i < spec.n_per_class; ++i) {
      Sample s;
      char idbuf[16];
      std::snprintf(idbuf, sizeof idbuf, "s%06ld", index++);
      s.id = idbuf;
      s.label = label;
      s.visual.resize(d_v);
      for (int j = 0; j < d_v; ++j) {
        s.visual[j] = (j == a ? 1.0 : 0.0) + spec.noise_sd * rng.normal();
      }
      int b_text = b;
      if (rng.uniform01() < spec.inconsistent_fraction) {
        b_text = static_cast<int>(rng.below(static_cast<std::uint64_t>(b_card)));
      }
      const std::string f1 = kFillerWords[rng.below(kFillerCount)];
      const std::string f2 = kFillerWords[rng.below(kFillerCount)];
      const std::string f3 = kFillerWords[rng.below(kFillerCount)];
      s.text = f1 + " topic" + std::to_string(b_text) + " " + f2 + " " + f3;
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

std::string vocabulary_to_text(const Vocabulary& vocab) {
  std::string out;
  for (int id = 1; id <= vocab.size(); ++id) {
    const std::string& tok = vocab.id_to_token[id];
    if (tok.find_first_of("\t\n") != std::string::npos) {
      throw std::invalid_argument("vocabulary_to_text: token contains tab or newline");
    }
    out += tok;
    out.push_back('\t');
    out += std::to_string(id);
    out.push_back('\n');
  }
  return out;
}

Vocabulary vocabulary_from_text(const std::string& text, int min_count) {
  Vocabulary vocab;
  vocab.min_count = min_count;
  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string ctx = "vocabulary line " + std::to_string(i + 1);
    const std::size_t tab = lines[i].find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw std::runtime_error(ctx + ": expected token<TAB>id");
    }
    const std::string tok = lines[i].substr(0, tab);
    const int id = parse_int_field(lines[i].substr(tab + 1), ctx);
    if (id != static_cast<int>(vocab.id_to_token.size())) {
      throw std::runtime_error(ctx + ": ids must be contiguous starting at 1");
    }
    if (!vocab.token_to_id.emplace(tok, id).second) {
      throw std::runtime_error(ctx + ": duplicate token '" + tok + "'");
    }
    vocab.id_to_token.push_back(tok);
  }
  return vocab;
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  atomic_write_file(path, vocabulary_to_text(vocab));
}

Vocabulary load_vocabulary(const std::string& path, int min_count) {
  return vocabulary_from_text(read_file(path), min_count);
}

}  // namespace covermodal
