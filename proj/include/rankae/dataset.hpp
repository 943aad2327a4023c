#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rankae/rng.hpp"

namespace rankae {

/// One instance's feature row, stored sparse. Indices are strictly
/// increasing and values finite; both are enforced on ingest.
struct SparseVector {
  std::vector<int> index;
  std::vector<float> value;

  int nnz() const { return int(index.size()); }
  bool operator==(const SparseVector&) const = default;
};

/// Sorted set of positive label ids. May be empty.
struct LabelSet {
  std::vector<int> ids;

  bool contains(int label) const;
  int size() const { return int(ids.size()); }
  bool empty() const { return ids.empty(); }
  bool operator==(const LabelSet&) const = default;
};

struct Instance {
  SparseVector features;
  LabelSet labels;
  bool operator==(const Instance&) const = default;
};

struct Dataset {
  int num_features = 0;  // V
  int num_labels = 0;    // L
  std::vector<Instance> instances;

  int num_instances() const { return int(instances.size()); }
  bool operator==(const Dataset&) const = default;
};

/// Dense word-embedding table, one row per feature.
struct EmbeddingTable {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  float* row(int i) { return data.data() + std::size_t(i) * cols; }
  const float* row(int i) const { return data.data() + std::size_t(i) * cols; }
};

struct ParseOptions {
  bool one_based = false;  // subtract 1 from label and feature indices
};

/// Reads the extreme-classification repository text format:
/// header "N V L", then one instance per line "l1,l2,... f:v f:v ...".
/// An empty label list is written as a leading space; a fully empty line is
/// a degenerate instance with no labels and no features.
/// Throws std::runtime_error with a line number on any format violation.
Dataset read_xmc(std::istream& in, const ParseOptions& opts = {});
Dataset read_xmc_file(const std::string& path, const ParseOptions& opts = {});

/// Writes the canonical form of the same format (sorted indices, single
/// spaces, shortest round-trip float formatting).
void write_xmc(std::ostream& out, const Dataset& d);
void write_xmc_file(const std::string& path, const Dataset& d);

/// Deterministic random partition; the first part receives
/// round(fraction * N) instances. Original instance order is preserved
/// within each part.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double fraction,
                                          std::uint64_t seed);

/// Reweights raw counts as tf * ln(N / (1 + df)) with negative idf clamped
/// to 0 (such entries are dropped), then L2-normalizes every row.
Dataset counts_to_tfidf(const Dataset& d);

/// One token per line; line number = feature index.
std::vector<std::string> read_vocab(std::istream& in);
std::vector<std::string> read_vocab_file(const std::string& path);

struct EmbeddingLoadResult {
  EmbeddingTable table;
  int found = 0;  // vocab entries matched in the file
};

/// Loads pretrained embeddings ("token v1 ... vC" per line) for the given
/// vocabulary. Rows for tokens absent from the file keep their random
/// Glorot initialization. Throws on a dimension mismatch in a matched line.
EmbeddingLoadResult load_word_embeddings(std::istream& in,
                                         const std::vector<std::string>& vocab,
                                         int dim, Rng& rng);

}  // namespace rankae
