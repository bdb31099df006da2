#ifndef HML_DATA_HPP
#define HML_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hml/hierarchy.hpp"
#include "hml/mat.hpp"

namespace hml {

enum class SplitTag { train, valid, test };

struct Dataset {
  Mat features;  // free of NaN once imputed
  Mat labels;    // ancestor-closed
  SplitTag split = SplitTag::train;
};

/// Parse result of one ARFF file. Features may hold NaN where the file had
/// `?`; impute with the training split's column means before use.
struct ArffParse {
  std::vector<std::string> attr_names;
  Hierarchy hierarchy;
  Mat features;
  Mat labels;
};

/// Accepted grammar: `%` comment lines; `@RELATION <name>`;
/// `@ATTRIBUTE <name> numeric`; one `@ATTRIBUTE class hierarchical
/// <comma-separated class list>` where `/` joins path components (ancestor
/// prefixes are created implicitly); `@DATA`; then comma-separated rows whose
/// last field lists the row's classes joined by `@`, with `?` as a missing
/// numeric value. Errors are ParseError with a line number, or UnknownNode
/// for an undeclared class token.
ArffParse parse_arff_text(const std::string& text);
ArffParse parse_arff(const std::string& path);

/// Column means over non-NaN entries; a column of only NaN gets mean 0.
std::vector<double> column_means(const Mat& features);

/// Replaces NaN entries with the given per-column values.
void impute(Mat& features, const std::vector<double>& means);

/// Adds `child<TAB>parent` edges from the sidecar file (`#` comments) and
/// rebuilds the hierarchy, re-running the cycle check.
Hierarchy load_dag_sidecar(const std::string& path, const Hierarchy& h);
Hierarchy load_dag_sidecar_text(const std::string& text, const Hierarchy& h);

struct SynthSpec {
  std::size_t n_nodes = 200;
  int max_depth = 5;
  std::size_t branching = 3;
  std::size_t dag_extra_edges = 0;
  std::size_t n_obs = 2000;
  double tail_exponent = 1.5;
  std::size_t feature_dim = 32;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
};

struct SynthResult {
  Hierarchy hierarchy;
  Dataset train, valid, test;
};

/// Long-tailed synthetic generator: a tree filled level by level (plus
/// depth-ordered extra DAG edges), node popularity proportional to
/// rank^(-tail_exponent) so deep nodes are rare, features as the sum of the
/// positive nodes' Gaussian prototypes plus noise. Rows split 70/15/15.
/// Same spec, same bytes.
SynthResult synth(const SynthSpec& spec);

/// Versioned little-endian container for one split plus its hierarchy;
/// round-trips exactly.
void save_dataset(const Dataset& d, const Hierarchy& h, const std::string& path);

struct LoadedDataset {
  Dataset data;
  Hierarchy hierarchy;
};
LoadedDataset load_dataset(const std::string& path);

}  // namespace hml

#endif  // HML_DATA_HPP
