#include "rankae/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace rankae {

namespace {

[[noreturn]] void fail(long line_no, const std::string& what) {
  throw std::runtime_error("line " + std::to_string(line_no) + ": " + what);
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

long parse_long_or_fail(const char* p, char** end, long line_no,
                        const char* what) {
  errno = 0;
  long v = std::strtol(p, end, 10);
  if (*end == p || errno != 0)
    fail(line_no, std::string("expected ") + what + " near '" +
                      std::string(p).substr(0, 16) + "'");
  return v;
}

struct Header {
  long n = 0, v = 0, l = 0;
};

Header parse_header(const std::string& line) {
  std::istringstream in(line);
  Header h;
  std::string rest;
  if (!(in >> h.n >> h.v >> h.l))
    throw std::runtime_error("line 1: malformed header, expected 'N V L'");
  if (in >> rest)
    throw std::runtime_error("line 1: malformed header, trailing text '" + rest + "'");
  if (h.n < 0 || h.v < 1 || h.l < 1)
    throw std::runtime_error("line 1: malformed header, counts out of range");
  return h;
}

// "l1,l2,..." up to the first space; empty when the line starts with a space.
// Returns the position where feature parsing starts.
const char* parse_label_list(const char* p, long line_no, int num_labels,
                             int offset, LabelSet& out) {
  if (*p == '\0' || *p == ' ') return p;
  while (true) {
    char* end = nullptr;
    long raw = parse_long_or_fail(p, &end, line_no, "label index");
    long label = raw - offset;
    if (label < 0 || label >= num_labels)
      fail(line_no, "label index " + std::to_string(raw) + " out of range for L=" +
                        std::to_string(num_labels));
    out.ids.push_back(int(label));
    p = end;
    if (*p == ',') {
      ++p;
      continue;
    }
    if (*p == ' ' || *p == '\0') return p;
    fail(line_no, std::string("unexpected character '") + *p + "' in label list");
  }
}

void parse_features(const char* p, long line_no, int num_features, int offset,
                    SparseVector& out) {
  while (*p != '\0') {
    while (*p == ' ' || *p == '\t') ++p;
    if (*p == '\0') break;
    char* end = nullptr;
    long raw = parse_long_or_fail(p, &end, line_no, "feature index");
    if (*end != ':')
      fail(line_no, "expected ':' after feature index " + std::to_string(raw));
    long feature = raw - offset;
    if (feature < 0 || feature >= num_features)
      fail(line_no, "feature index " + std::to_string(raw) +
                        " out of range for V=" + std::to_string(num_features));
    p = end + 1;
    errno = 0;
    double v = std::strtod(p, &end);
    if (end == p || errno != 0)
      fail(line_no, "non-numeric value for feature " + std::to_string(raw));
    if (!std::isfinite(v))
      fail(line_no, "non-finite value for feature " + std::to_string(raw));
    if (*end != '\0' && *end != ' ' && *end != '\t')
      fail(line_no, std::string("unexpected character '") + *end + "' after value");
    out.index.push_back(int(feature));
    out.value.push_back(float(v));
    p = end;
  }
}

void format_float(std::string& out, float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", double(v));
  out += buf;
}

}  // namespace

bool LabelSet::contains(int label) const {
  return std::binary_search(ids.begin(), ids.end(), label);
}

Dataset read_xmc(std::istream& in, const ParseOptions& opts) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("line 1: empty input");
  strip_cr(line);
  const Header h = parse_header(line);

  Dataset d;
  d.num_features = int(h.v);
  d.num_labels = int(h.l);
  d.instances.reserve(std::size_t(h.n));

  const int offset = opts.one_based ? 1 : 0;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    Instance inst;
    const char* p = parse_label_list(line.c_str(), line_no, d.num_labels, offset,
                                     inst.labels);
    parse_features(p, line_no, d.num_features, offset, inst.features);

    std::sort(inst.labels.ids.begin(), inst.labels.ids.end());
    inst.labels.ids.erase(
        std::unique(inst.labels.ids.begin(), inst.labels.ids.end()),
        inst.labels.ids.end());

    // Sort feature pairs by index; duplicates are a format error.
    if (!std::is_sorted(inst.features.index.begin(), inst.features.index.end())) {
      std::vector<int> order(inst.features.index.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return inst.features.index[a] < inst.features.index[b];
      });
      SparseVector sorted;
      sorted.index.reserve(order.size());
      sorted.value.reserve(order.size());
      for (int i : order) {
        sorted.index.push_back(inst.features.index[i]);
        sorted.value.push_back(inst.features.value[i]);
      }
      inst.features = std::move(sorted);
    }
    for (std::size_t i = 1; i < inst.features.index.size(); ++i) {
      if (inst.features.index[i] == inst.features.index[i - 1])
        fail(line_no, "duplicate feature index " +
                          std::to_string(inst.features.index[i] + offset));
    }

    d.instances.push_back(std::move(inst));
  }

  if (long(d.instances.size()) != h.n)
    throw std::runtime_error("header declares " + std::to_string(h.n) +
                             " instances but file contains " +
                             std::to_string(d.instances.size()));
  return d;
}

Dataset read_xmc_file(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  try {
    return read_xmc(in, opts);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_xmc(std::ostream& out, const Dataset& d) {
  out << d.num_instances() << ' ' << d.num_features << ' ' << d.num_labels << '\n';
  std::string line;
  for (const Instance& inst : d.instances) {
    line.clear();
    for (std::size_t i = 0; i < inst.labels.ids.size(); ++i) {
      if (i) line += ',';
      line += std::to_string(inst.labels.ids[i]);
    }
    for (std::size_t i = 0; i < inst.features.index.size(); ++i) {
      line += ' ';
      line += std::to_string(inst.features.index[i]);
      line += ':';
      format_float(line, inst.features.value[i]);
    }
    line += '\n';
    out << line;
  }
}

void write_xmc_file(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_xmc(out, d);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double fraction,
                                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split fraction must be in (0,1)");
  if (d.instances.empty())
    throw std::invalid_argument("cannot split an empty dataset");

  const int n = d.num_instances();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);

  const long first_size = std::lround(fraction * double(n));
  std::vector<char> in_first(n, 0);
  for (long i = 0; i < first_size; ++i) in_first[order[i]] = 1;

  Dataset a, b;
  a.num_features = b.num_features = d.num_features;
  a.num_labels = b.num_labels = d.num_labels;
  a.instances.reserve(std::size_t(first_size));
  b.instances.reserve(std::size_t(n - first_size));
  for (int i = 0; i < n; ++i)
    (in_first[i] ? a : b).instances.push_back(d.instances[i]);
  return {std::move(a), std::move(b)};
}

Dataset counts_to_tfidf(const Dataset& d) {
  const int n = d.num_instances();
  std::vector<long> df(d.num_features, 0);
  for (const Instance& inst : d.instances) {
    for (std::size_t i = 0; i < inst.features.index.size(); ++i) {
      const float v = inst.features.value[i];
      if (v < 0.0f)
        throw std::runtime_error("counts_to_tfidf: negative feature value " +
                                 std::to_string(v));
      if (v != 0.0f) ++df[inst.features.index[i]];
    }
  }

  std::vector<double> idf(d.num_features, 0.0);
  for (int j = 0; j < d.num_features; ++j) {
    if (df[j] == 0) continue;
    idf[j] = std::max(0.0, std::log(double(n) / (1.0 + double(df[j]))));
  }

  Dataset out;
  out.num_features = d.num_features;
  out.num_labels = d.num_labels;
  out.instances.reserve(d.instances.size());
  for (const Instance& inst : d.instances) {
    Instance t;
    t.labels = inst.labels;
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < inst.features.index.size(); ++i) {
      const int j = inst.features.index[i];
      const double w = double(inst.features.value[i]) * idf[j];
      if (w == 0.0) continue;  // clamped idf or zero count: drop the entry
      t.features.index.push_back(j);
      t.features.value.push_back(float(w));
      norm_sq += w * w;
    }
    if (norm_sq > 0.0) {
      const float inv = float(1.0 / std::sqrt(norm_sq));
      for (float& v : t.features.value) v *= inv;
    }
    out.instances.push_back(std::move(t));
  }
  return out;
}

std::vector<std::string> read_vocab(std::istream& in) {
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    vocab.push_back(line);
  }
  return vocab;
}

std::vector<std::string> read_vocab_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  return read_vocab(in);
}

EmbeddingLoadResult load_word_embeddings(std::istream& in,
                                         const std::vector<std::string>& vocab,
                                         int dim, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("embedding dimension must be >= 1");

  EmbeddingLoadResult result;
  EmbeddingTable& table = result.table;
  table.rows = int(vocab.size());
  table.cols = dim;
  table.data.resize(std::size_t(table.rows) * dim);

  // Random init first, in row order, so the fallback rows are reproducible
  // no matter which tokens the file happens to contain.
  const double bound = std::sqrt(6.0 / (double(table.rows) + double(dim)));
  for (auto& x : table.data) x = float(rng.uniform(-bound, bound));

  std::unordered_map<std::string, std::vector<int>> rows_for_token;
  for (int i = 0; i < int(vocab.size()); ++i)
    rows_for_token[vocab[i]].push_back(i);

  std::vector<char> filled(vocab.size(), 0);
  std::string line;
  long line_no = 0;
  std::vector<float> values;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const std::size_t sep = line.find(' ');
    if (sep == std::string::npos) continue;
    auto it = rows_for_token.find(line.substr(0, sep));
    if (it == rows_for_token.end()) continue;  // token not in vocabulary

    values.clear();
    const char* p = line.c_str() + sep;
    while (*p != '\0') {
      while (*p == ' ') ++p;
      if (*p == '\0') break;
      char* end = nullptr;
      errno = 0;
      double v = std::strtod(p, &end);
      if (end == p || errno != 0 || !std::isfinite(v))
        fail(line_no, "bad embedding value for token '" + it->first + "'");
      values.push_back(float(v));
      p = end;
    }
    if (int(values.size()) != dim)
      fail(line_no, "token '" + it->first + "' has " +
                        std::to_string(values.size()) + " values, expected " +
                        std::to_string(dim));
    for (int row : it->second) {
      std::copy(values.begin(), values.end(), table.row(row));
      if (!filled[row]) {
        filled[row] = 1;
        ++result.found;
      }
    }
  }
  return result;
}

}  // namespace rankae
