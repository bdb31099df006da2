#include "hml/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "hml/errors.hpp"
#include "hml/rng.hpp"

namespace hml {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_number(const std::string& tok, int line_no) {
  const std::string t = trim(tok);
  if (t.empty()) throw ParseError("empty numeric field", line_no);
  if (t == "?") return std::nan("");
  const char* begin = t.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + t.size()) throw ParseError("bad numeric value '" + t + "'", line_no);
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

ArffParse parse_arff_text(const std::string& text) {
  std::vector<std::string> attr_names;
  std::vector<std::string> class_tokens;
  bool have_class = false;
  bool in_data = false;
  std::vector<std::vector<double>> feature_rows;
  std::vector<std::vector<std::string>> label_rows;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '%') continue;
    if (line[0] == '@') {
      if (in_data) throw ParseError("directive after @DATA", line_no);
      std::istringstream ls(line);
      std::string directive;
      ls >> directive;
      const std::string d = lower(directive);
      if (d == "@relation") continue;
      if (d == "@data") {
        in_data = true;
        continue;
      }
      if (d != "@attribute") throw ParseError("unknown directive '" + directive + "'", line_no);
      std::string name;
      ls >> name;
      if (name.empty()) throw ParseError("attribute without a name", line_no);
      std::string rest;
      std::getline(ls, rest);
      rest = trim(rest);
      if (lower(rest) == "numeric") {
        attr_names.push_back(name);
        continue;
      }
      const std::string rl = lower(rest);
      const std::size_t kw = std::strlen("hierarchical");
      if (rl.rfind("hierarchical", 0) == 0 &&
          (rl.size() == kw || std::isspace(static_cast<unsigned char>(rl[kw])))) {
        if (have_class) throw ParseError("second hierarchical class attribute", line_no);
        have_class = true;
        const std::string list = trim(rest.substr(std::strlen("hierarchical")));
        if (list.empty()) throw ParseError("hierarchical attribute with empty class list", line_no);
        for (const std::string& tok : split(list, ',')) {
          const std::string t = trim(tok);
          if (t.empty()) throw ParseError("empty class token in class list", line_no);
          class_tokens.push_back(t);
        }
        continue;
      }
      throw ParseError("unsupported attribute type '" + rest + "'", line_no);
    }
    if (!in_data) throw ParseError("data row before @DATA", line_no);
    if (!have_class) throw ParseError("no hierarchical class attribute declared", line_no);
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != attr_names.size() + 1)
      throw ParseError("expected " + std::to_string(attr_names.size() + 1) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    std::vector<double> feats(attr_names.size());
    for (std::size_t i = 0; i < attr_names.size(); ++i)
      feats[i] = parse_number(fields[i], line_no);
    feature_rows.push_back(std::move(feats));
    std::vector<std::string> labels;
    const std::string label_field = trim(fields.back());
    if (!label_field.empty())
      for (const std::string& tok : split(label_field, '@')) labels.push_back(trim(tok));
    label_rows.push_back(std::move(labels));
  }
  if (!have_class) throw ParseError("no hierarchical class attribute declared", line_no);

  // Nodes: every declared token plus every `/` path prefix, in first-seen
  // order so column order is stable across splits of the same declaration.
  std::vector<std::string> node_ids;
  std::unordered_map<std::string, std::size_t> index_of;
  std::vector<std::pair<std::string, std::string>> edges;
  auto intern = [&](const std::string& id) {
    auto it = index_of.find(id);
    if (it != index_of.end()) return it->second;
    node_ids.push_back(id);
    index_of.emplace(id, node_ids.size() - 1);
    return node_ids.size() - 1;
  };
  for (const std::string& tok : class_tokens) {
    std::size_t pos = 0;
    std::string prev;
    while (true) {
      const std::size_t slash = tok.find('/', pos);
      const std::string prefix = tok.substr(0, slash == std::string::npos ? tok.size() : slash);
      if (prefix.empty() || prefix.back() == '/')
        throw ParseError("malformed class path '" + tok + "'");
      intern(prefix);
      if (!prev.empty()) edges.emplace_back(prev, prefix);
      if (slash == std::string::npos) break;
      prev = prefix;
      pos = slash + 1;
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  ArffParse out;
  out.attr_names = std::move(attr_names);
  out.hierarchy = build_hierarchy(node_ids, edges);

  out.features = Mat(feature_rows.size(), out.attr_names.size());
  for (std::size_t r = 0; r < feature_rows.size(); ++r)
    std::copy(feature_rows[r].begin(), feature_rows[r].end(), out.features.row_ptr(r));

  Mat raw_labels(label_rows.size(), out.hierarchy.size());
  for (std::size_t r = 0; r < label_rows.size(); ++r)
    for (const std::string& tok : label_rows[r]) {
      auto it = index_of.find(tok);
      if (it == index_of.end()) throw UnknownNode("unknown class token '" + tok + "'");
      raw_labels(r, it->second) = 1.0;
    }
  out.labels = close_labels(raw_labels, out.hierarchy);
  return out;
}

ArffParse parse_arff(const std::string& path) { return parse_arff_text(read_file(path)); }

std::vector<double> column_means(const Mat& features) {
  std::vector<double> means(features.cols, 0.0);
  std::vector<std::size_t> counts(features.cols, 0);
  for (std::size_t r = 0; r < features.rows; ++r) {
    const double* row = features.row_ptr(r);
    for (std::size_t c = 0; c < features.cols; ++c)
      if (!std::isnan(row[c])) {
        means[c] += row[c];
        ++counts[c];
      }
  }
  for (std::size_t c = 0; c < features.cols; ++c)
    means[c] = counts[c] > 0 ? means[c] / static_cast<double>(counts[c]) : 0.0;
  return means;
}

void impute(Mat& features, const std::vector<double>& means) {
  if (features.cols != means.size()) throw ShapeError("impute: column count mismatch");
  for (std::size_t r = 0; r < features.rows; ++r) {
    double* row = features.row_ptr(r);
    for (std::size_t c = 0; c < features.cols; ++c)
      if (std::isnan(row[c])) row[c] = means[c];
  }
}

Hierarchy load_dag_sidecar_text(const std::string& text, const Hierarchy& h) {
  std::vector<std::pair<std::size_t, std::size_t>> edges = h.edges;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected child<TAB>parent", line_no);
    const std::string child = trim(line.substr(0, tab));
    const std::string parent = trim(line.substr(tab + 1));
    auto ci = h.index_of.find(child);
    if (ci == h.index_of.end()) throw UnknownNode("unknown node id: " + child);
    auto pi = h.index_of.find(parent);
    if (pi == h.index_of.end()) throw UnknownNode("unknown node id: " + parent);
    edges.emplace_back(pi->second, ci->second);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return build_hierarchy(h.node_ids, edges);
}

Hierarchy load_dag_sidecar(const std::string& path, const Hierarchy& h) {
  return load_dag_sidecar_text(read_file(path), h);
}

SynthResult synth(const SynthSpec& spec) {
  if (spec.n_nodes == 0) throw Error("synth: n_nodes must be positive");
  if (spec.max_depth < 0) throw Error("synth: max_depth must be non-negative");
  if (spec.feature_dim == 0) throw Error("synth: feature_dim must be positive");

  // Tree filled level by level: deeper levels hold more, rarer nodes.
  std::vector<std::string> node_ids(spec.n_nodes);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<int> depth_of(spec.n_nodes, 0);
  node_ids[0] = "n0";
  std::size_t next = 1;
  std::size_t level_lo = 0, level_hi = 1;
  int depth = 0;
  while (next < spec.n_nodes && depth < spec.max_depth) {
    const std::size_t new_lo = next;
    for (std::size_t p = level_lo; p < level_hi && next < spec.n_nodes; ++p)
      for (std::size_t k = 0; k < spec.branching && next < spec.n_nodes; ++k) {
        node_ids[next] = "n" + std::to_string(next);
        edges.emplace_back(p, next);
        depth_of[next] = depth + 1;
        ++next;
      }
    if (next == new_lo) break;  // current level had no parents left
    level_lo = new_lo;
    level_hi = next;
    ++depth;
  }
  if (next < spec.n_nodes)
    throw Error("synth: n_nodes unreachable with this branching and max_depth");

  Rng struct_rng(spec.seed, 31);
  std::size_t added = 0, attempts = 0;
  while (added < spec.dag_extra_edges && attempts < spec.dag_extra_edges * 50 + 100) {
    ++attempts;
    const std::size_t u = static_cast<std::size_t>(struct_rng.uniform_int(spec.n_nodes));
    const std::size_t v = static_cast<std::size_t>(struct_rng.uniform_int(spec.n_nodes));
    if (depth_of[u] >= depth_of[v]) continue;  // deeper targets only, stays acyclic
    const auto e = std::make_pair(u, v);
    if (std::find(edges.begin(), edges.end(), e) != edges.end()) continue;
    edges.push_back(e);
    ++added;
  }

  SynthResult out;
  out.hierarchy = build_hierarchy(node_ids, edges);

  // Rank follows creation order, so popularity decays with depth.
  std::vector<double> pop(spec.n_nodes);
  for (std::size_t i = 0; i < spec.n_nodes; ++i)
    pop[i] = std::pow(static_cast<double>(i + 1), -spec.tail_exponent);
  std::vector<double> cum(spec.n_nodes);
  std::partial_sum(pop.begin(), pop.end(), cum.begin());
  const double pop_total = cum.back();

  Rng proto_rng(spec.seed, 30);
  std::vector<Mat> protos;
  protos.reserve(spec.n_nodes);
  for (std::size_t i = 0; i < spec.n_nodes; ++i) {
    Mat p(1, spec.feature_dim);
    for (double& x : p.v) x = proto_rng.normal();
    protos.push_back(std::move(p));
  }

  Rng sample_rng(spec.seed, 32);
  Rng noise_rng(spec.seed, 33);
  auto draw_node = [&]() {
    const double r = sample_rng.uniform(0.0, pop_total);
    return static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
  };

  Mat features(spec.n_obs, spec.feature_dim);
  Mat labels(spec.n_obs, spec.n_nodes);
  for (std::size_t r = 0; r < spec.n_obs; ++r) {
    std::vector<std::size_t> targets = {draw_node()};
    if (sample_rng.uniform() < 0.3) targets.push_back(draw_node());
    for (std::size_t t : targets) labels(r, t) = 1.0;
  }
  labels = close_labels(labels, out.hierarchy);
  for (std::size_t r = 0; r < spec.n_obs; ++r) {
    double* frow = features.row_ptr(r);
    for (std::size_t c = 0; c < spec.n_nodes; ++c)
      if (labels(r, c) != 0.0) {
        const double* prow = protos[c].row_ptr(0);
        for (std::size_t f = 0; f < spec.feature_dim; ++f) frow[f] += prow[f];
      }
    for (std::size_t f = 0; f < spec.feature_dim; ++f)
      frow[f] += spec.noise_sigma * noise_rng.normal();
  }

  const std::size_t n_train = spec.n_obs * 70 / 100;
  const std::size_t n_valid = spec.n_obs * 15 / 100;
  std::vector<std::size_t> idx(spec.n_obs);
  std::iota(idx.begin(), idx.end(), 0);
  const std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + n_train);
  const std::vector<std::size_t> valid_idx(idx.begin() + n_train,
                                           idx.begin() + n_train + n_valid);
  const std::vector<std::size_t> test_idx(idx.begin() + n_train + n_valid, idx.end());
  out.train = {take_rows(features, train_idx), take_rows(labels, train_idx), SplitTag::train};
  out.valid = {take_rows(features, valid_idx), take_rows(labels, valid_idx), SplitTag::valid};
  out.test = {take_rows(features, test_idx), take_rows(labels, test_idx), SplitTag::test};
  return out;
}

namespace {

constexpr char kDsMagic[8] = {'H', 'M', 'L', 'D', 'S', '0', '0', '1'};

void w_u64(std::ofstream& f, std::uint64_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint64_t r_u64(std::ifstream& f) {
  std::uint64_t v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!f) throw ParseError("dataset file truncated");
  return v;
}
void w_mat(std::ofstream& f, const Mat& m) {
  w_u64(f, m.rows);
  w_u64(f, m.cols);
  f.write(reinterpret_cast<const char*>(m.v.data()),
          static_cast<std::streamsize>(m.v.size() * sizeof(double)));
}
Mat r_mat(std::ifstream& f) {
  const std::uint64_t rows = r_u64(f);
  const std::uint64_t cols = r_u64(f);
  if (rows > (1u << 26) || cols > (1u << 26) || rows * cols > (1u << 28))
    throw ParseError("dataset matrix dimensions implausible");
  Mat m(rows, cols);
  f.read(reinterpret_cast<char*>(m.v.data()),
         static_cast<std::streamsize>(m.v.size() * sizeof(double)));
  if (!f) throw ParseError("dataset file truncated");
  return m;
}
void w_str(std::ofstream& f, const std::string& s) {
  w_u64(f, s.size());
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string r_str(std::ifstream& f) {
  const std::uint64_t len = r_u64(f);
  if (len > (1u << 20)) throw ParseError("dataset string length implausible");
  std::string s(len, '\0');
  f.read(s.data(), static_cast<std::streamsize>(len));
  if (!f) throw ParseError("dataset file truncated");
  return s;
}

}  // namespace

void save_dataset(const Dataset& d, const Hierarchy& h, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open dataset for writing: " + path);
  f.write(kDsMagic, sizeof kDsMagic);
  w_u64(f, static_cast<std::uint64_t>(d.split));
  w_u64(f, h.size());
  for (const std::string& id : h.node_ids) w_str(f, id);
  w_u64(f, h.edges.size());
  for (auto [p, c] : h.edges) {
    w_u64(f, p);
    w_u64(f, c);
  }
  w_mat(f, d.features);
  w_mat(f, d.labels);
  if (!f) throw Error("dataset write failed: " + path);
}

LoadedDataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open dataset: " + path);
  char magic[8];
  f.read(magic, sizeof magic);
  if (!f || std::memcmp(magic, kDsMagic, sizeof magic) != 0)
    throw ParseError("not a dataset file: " + path);
  LoadedDataset out;
  const std::uint64_t split = r_u64(f);
  if (split > 2) throw ParseError("bad split tag");
  out.data.split = static_cast<SplitTag>(split);
  const std::uint64_t n = r_u64(f);
  if (n > (1u << 20)) throw ParseError("dataset node count implausible");
  std::vector<std::string> node_ids(n);
  for (std::string& id : node_ids) id = r_str(f);
  const std::uint64_t n_edges = r_u64(f);
  if (n_edges > (1u << 24)) throw ParseError("dataset edge count implausible");
  std::vector<std::pair<std::size_t, std::size_t>> edges(n_edges);
  for (auto& [p, c] : edges) {
    p = r_u64(f);
    c = r_u64(f);
  }
  out.hierarchy = build_hierarchy(std::move(node_ids), edges);
  out.data.features = r_mat(f);
  out.data.labels = r_mat(f);
  if (out.data.labels.cols != out.hierarchy.size())
    throw ParseError("dataset labels do not match hierarchy width");
  if (out.data.labels.rows != out.data.features.rows)
    throw ParseError("dataset feature/label row mismatch");
  return out;
}

}  // namespace hml
