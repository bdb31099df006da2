#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "hml/constraint.hpp"
#include "hml/data.hpp"
#include "hml/errors.hpp"
#include "hml/imbalance.hpp"
#include "hml/metrics.hpp"
#include "hml/nn.hpp"
#include "hml/resample.hpp"

namespace {

using hml::Mat;
using ordered_json = nlohmann::ordered_json;

std::string default_out_dir() {
  const char* env = std::getenv("HML_OUT_DIR");
  return (env && *env) ? std::string(env) : std::string(".");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw hml::Error("cannot open for writing: " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw hml::Error("write failed: " + path);
}

std::string out_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

/// Expands `--config FILE` into `--key=value` tokens inserted before the
/// explicit arguments, so command-line values win. Lines are `key=value`,
/// blank, or `#` comments; keys are long option names without dashes.
std::vector<std::string> effective_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0].empty() || args[0][0] == '-') return args;
  std::string cfg_path;
  std::vector<std::string> rest{args[0]};
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw hml::ConfigError("--config needs a file path");
      cfg_path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      cfg_path = a.substr(9);
    } else {
      rest.push_back(a);
    }
  }
  if (cfg_path.empty()) return args;

  std::ifstream f(cfg_path);
  if (!f) throw hml::ConfigError("cannot read config file: " + cfg_path);
  std::vector<std::string> out{rest[0]};
  std::string line;
  int n = 0;
  while (std::getline(f, line)) {
    ++n;
    std::size_t b = line.find_first_not_of(" \t");
    std::size_t e = line.find_last_not_of(" \t\r");
    if (b == std::string::npos) continue;
    line = line.substr(b, e - b + 1);
    if (line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw hml::ConfigError("config line " + std::to_string(n) + " is not key=value");
    // An empty value means unset; expanding it as `--key=` would make the
    // parser consume the next token as the value.
    if (eq + 1 == line.size()) continue;
    out.push_back("--" + line.substr(0, eq) + "=" + line.substr(eq + 1));
  }
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

std::string kv(const std::string& k, const std::string& v) { return k + "=" + v + "\n"; }
std::string kv(const std::string& k, double v) { return kv(k, fmt(v)); }
std::string kv(const std::string& k, std::size_t v) { return kv(k, std::to_string(v)); }
std::string kv(const std::string& k, int v) { return kv(k, std::to_string(v)); }
std::string kv(const std::string& k, bool v) { return kv(k, std::string(v ? "true" : "false")); }

void prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw hml::Error("cannot create output directory " + dir + ": " + ec.message());
}

struct Inputs {
  Mat x;
  Mat y;
  hml::Hierarchy h;
  hml::SplitTag split = hml::SplitTag::train;
};

/// One dataset from either container: the binary format carries its
/// hierarchy; ARFF features are imputed with column means, taken from
/// impute_from when given so evaluation can reuse training statistics.
Inputs load_inputs(const std::string& data_path, const std::string& arff_path,
                   const std::string& impute_from) {
  if (!data_path.empty() && !arff_path.empty())
    throw hml::ConfigError("give either --data or --arff, not both");
  if (data_path.empty() && arff_path.empty())
    throw hml::ConfigError("an input is required: --data or --arff");
  Inputs in;
  if (!data_path.empty()) {
    hml::LoadedDataset ld = hml::load_dataset(data_path);
    in.x = std::move(ld.data.features);
    in.y = std::move(ld.data.labels);
    in.h = std::move(ld.hierarchy);
    in.split = ld.data.split;
    return in;
  }
  hml::ArffParse p = hml::parse_arff(arff_path);
  std::vector<double> means;
  if (!impute_from.empty()) {
    hml::ArffParse ref = hml::parse_arff(impute_from);
    if (ref.features.cols != p.features.cols)
      throw hml::DimensionMismatch("imputation source has a different attribute count");
    means = hml::column_means(ref.features);
  } else {
    means = hml::column_means(p.features);
  }
  hml::impute(p.features, means);
  in.x = std::move(p.features);
  in.y = std::move(p.labels);
  in.h = std::move(p.hierarchy);
  return in;
}

const char* split_name(hml::SplitTag t) {
  switch (t) {
    case hml::SplitTag::train: return "train";
    case hml::SplitTag::valid: return "valid";
    case hml::SplitTag::test: return "test";
  }
  return "train";
}

ordered_json report_json(const hml::MetricsReport& r, const hml::Hierarchy& h) {
  ordered_json j;
  j["macro"] = {{"precision", r.macro.precision}, {"recall", r.macro.recall}, {"f1", r.macro.f1}};
  j["micro"] = {{"precision", r.micro.precision}, {"recall", r.micro.recall}, {"f1", r.micro.f1}};
  j["average_precision"] = r.ap;
  j["binarized_average_precision"] = r.bin_ap;
  ordered_json per_node = ordered_json::object();
  for (std::size_t i = 0; i < h.size(); ++i) {
    const hml::NodeCounts& c = r.counts[i];
    const hml::Prf& p = r.per_node[i];
    per_node[h.node_ids[i]] = {{"positives", c.tp + c.fn}, {"tp", c.tp},
                               {"fp", c.fp},               {"fn", c.fn},
                               {"tn", c.tn},               {"precision", p.precision},
                               {"recall", p.recall},       {"f1", p.f1}};
  }
  j["per_node"] = std::move(per_node);
  return j;
}

std::string metrics_csv(const hml::MetricsReport& r) {
  std::string s = "metric,value\n";
  s += "macro_precision," + fmt(r.macro.precision) + "\n";
  s += "macro_recall," + fmt(r.macro.recall) + "\n";
  s += "macro_f1," + fmt(r.macro.f1) + "\n";
  s += "micro_precision," + fmt(r.micro.precision) + "\n";
  s += "micro_recall," + fmt(r.micro.recall) + "\n";
  s += "micro_f1," + fmt(r.micro.f1) + "\n";
  s += "average_precision," + fmt(r.ap) + "\n";
  s += "binarized_average_precision," + fmt(r.bin_ap) + "\n";
  return s;
}

std::string per_node_csv(const hml::MetricsReport& r, const hml::Hierarchy& h) {
  std::string s = "node,positives,tp,fp,fn,tn,precision,recall,f1\n";
  for (std::size_t i = 0; i < h.size(); ++i) {
    const hml::NodeCounts& c = r.counts[i];
    const hml::Prf& p = r.per_node[i];
    s += h.node_ids[i] + "," + std::to_string(c.tp + c.fn) + "," + std::to_string(c.tp) + "," +
         std::to_string(c.fp) + "," + std::to_string(c.fn) + "," + std::to_string(c.tn) + "," +
         fmt(p.precision) + "," + fmt(p.recall) + "," + fmt(p.f1) + "\n";
  }
  return s;
}

void write_report_files(const std::string& out, const hml::MetricsReport& r,
                        const hml::Hierarchy& h, ordered_json extra) {
  ordered_json j = report_json(r, h);
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_text(out_path(out, "metrics.json"), j.dump(2) + "\n");
  write_text(out_path(out, "metrics.csv"), metrics_csv(r));
  write_text(out_path(out, "per-node.csv"), per_node_csv(r, h));
}

struct TrainCli {
  std::string data, arff, val_data, val_arff, out;
  double lr = 1e-4;
  std::size_t epochs = 20;
  std::size_t batch = 4;
  bool no_imbalance = false;
  double w0 = 0.25;
  std::string n_classes_mode = "nodes";
  std::string focal = "none";
  double u0 = 0.25;
  double focal_k = 1.0;
  std::string uncertainty_source = "ensemble";
  std::size_t dropout_passes = 0;
  bool post_constraint = false;
  std::string scheduler = "none";
  double scheduler_k = 3.0;
  double lambda = 0.5;
  std::size_t ensemble_size = 10;
  std::string ensemble_mode = "independent";
  bool unfreeze_trunk = false;
  std::size_t hidden = 64;
  double dropout = 0.7;
  std::uint64_t seed = 0;
  double threshold = 0.5;
};

std::string resolved_config(const TrainCli& c) {
  std::string s;
  s += kv("data", c.data);
  s += kv("arff", c.arff);
  s += kv("val", c.val_data);
  s += kv("val-arff", c.val_arff);
  s += kv("out", c.out);
  s += kv("lr", c.lr);
  s += kv("epochs", c.epochs);
  s += kv("batch", c.batch);
  s += kv("no-imbalance", c.no_imbalance);
  s += kv("w0", c.w0);
  s += kv("n-classes-mode", c.n_classes_mode);
  s += kv("focal", c.focal);
  s += kv("u0", c.u0);
  s += kv("focal-k", c.focal_k);
  s += kv("uncertainty-source", c.uncertainty_source);
  s += kv("dropout-passes", c.dropout_passes);
  s += kv("post-constraint", c.post_constraint);
  s += kv("scheduler", c.scheduler);
  s += kv("scheduler-k", c.scheduler_k);
  s += kv("lambda", c.lambda);
  s += kv("ensemble-size", c.ensemble_size);
  s += kv("ensemble-mode", c.ensemble_mode);
  s += kv("unfreeze-trunk", c.unfreeze_trunk);
  s += kv("hidden", c.hidden);
  s += kv("dropout", c.dropout);
  s += kv("seed", c.seed);
  s += kv("threshold", c.threshold);
  return s;
}

hml::NClassesMode parse_n_classes(const std::string& s) {
  return s == "binary" ? hml::NClassesMode::binary : hml::NClassesMode::node_count;
}

hml::FocalKind parse_focal(const std::string& s) {
  if (s == "bbma") return hml::FocalKind::bbma;
  if (s == "gmu") return hml::FocalKind::gmu;
  if (s == "ep-kl") return hml::FocalKind::ep_kl;
  if (s == "ep-js") return hml::FocalKind::ep_js;
  return hml::FocalKind::none;
}

hml::SchedulerKind parse_scheduler(const std::string& s) {
  if (s == "linear") return hml::SchedulerKind::linear;
  if (s == "exp") return hml::SchedulerKind::exponential;
  if (s == "alt") return hml::SchedulerKind::alternating;
  if (s == "mixed") return hml::SchedulerKind::mixed;
  return hml::SchedulerKind::none;
}

hml::TrainConfig to_train_config(const TrainCli& c) {
  if (c.lr <= 0.0) throw hml::ConfigError("--lr must be positive");
  if (c.epochs == 0) throw hml::ConfigError("--epochs must be at least 1");
  if (c.batch == 0) throw hml::ConfigError("--batch must be at least 1");
  if (c.w0 < 0.0) throw hml::ConfigError("--w0 must be non-negative");
  if (c.u0 < 0.0) throw hml::ConfigError("--u0 must be non-negative");
  if (c.focal_k <= 0.0) throw hml::ConfigError("--focal-k must be positive");
  if (c.scheduler_k <= 0.0) throw hml::ConfigError("--scheduler-k must be positive");
  if (c.lambda < 0.0 || c.lambda > 1.0) throw hml::ConfigError("--lambda must be in [0,1]");
  if (c.ensemble_size == 0) throw hml::ConfigError("--ensemble-size must be at least 1");
  if (c.hidden == 0) throw hml::ConfigError("--hidden must be at least 1");
  if (c.dropout < 0.0 || c.dropout >= 1.0) throw hml::ConfigError("--dropout must be in [0,1)");
  if (c.threshold <= 0.0 || c.threshold > 1.0)
    throw hml::ConfigError("--threshold must be in (0,1]");
  hml::TrainConfig cfg;
  cfg.lr = c.lr;
  cfg.epochs = c.epochs;
  cfg.batch_size = c.batch;
  cfg.imbalance_on = !c.no_imbalance;
  cfg.w0 = c.w0;
  cfg.n_classes_mode = parse_n_classes(c.n_classes_mode);
  cfg.focal = parse_focal(c.focal);
  cfg.u0 = c.u0;
  cfg.focal_k = c.focal_k;
  cfg.uncertainty_source = c.uncertainty_source == "dropout" ? hml::UncertaintySource::dropout
                                                             : hml::UncertaintySource::ensemble;
  cfg.dropout_passes = c.dropout_passes;
  cfg.uncertainty_post_constraint = c.post_constraint;
  cfg.scheduler = parse_scheduler(c.scheduler);
  cfg.scheduler_k = c.scheduler_k;
  cfg.lambda = c.lambda;
  cfg.ensemble_size = c.ensemble_size;
  cfg.mode = c.ensemble_mode == "shared" ? hml::EnsembleMode::shared_trunk_heads
                                         : hml::EnsembleMode::independent;
  cfg.trunk_frozen = !c.unfreeze_trunk;
  cfg.hidden = c.hidden;
  cfg.dropout_rate = c.dropout;
  cfg.seed = c.seed;
  cfg.threshold = c.threshold;
  return cfg;
}

void add_input_options(CLI::App* cmd, std::string& data, std::string& arff) {
  cmd->add_option("--data", data, "dataset container produced by synth or resample");
  cmd->add_option("--arff", arff, "ARFF file with one hierarchical class attribute");
}

void run_train(const TrainCli& c, const std::string& config_str) {
  prepare_out_dir(c.out);
  Inputs in = load_inputs(c.data, c.arff, "");
  hml::TrainConfig cfg = to_train_config(c);

  Inputs val;
  bool have_val = false;
  if (!c.val_data.empty() || !c.val_arff.empty()) {
    val = load_inputs(c.val_data, c.val_arff, c.arff);
    if (val.y.cols != in.y.cols)
      throw hml::DimensionMismatch("validation label width differs from training");
    if (val.x.cols != in.x.cols)
      throw hml::DimensionMismatch("validation feature width differs from training");
    have_val = true;
  }

  hml::TrainResult r = hml::train(in.x, in.y, have_val ? &val.x : nullptr,
                                  have_val ? &val.y : nullptr, in.h, cfg);

  hml::save_checkpoint(r.ensemble, out_path(c.out, "checkpoint.bin"), fnv1a(config_str));

  const Inputs& eval_on = have_val ? val : in;
  hml::MetricsReport rep =
      hml::compute_report(hml::f_cm(r.ensemble.mean_forward(eval_on.x), in.h), eval_on.y,
                          cfg.threshold);

  ordered_json extra;
  extra["evaluated_on"] = have_val ? "valid" : "train";
  ordered_json hist = ordered_json::array();
  for (std::size_t e = 0; e < r.history.size(); ++e) {
    ordered_json rec;
    rec["epoch"] = e;
    rec["train_loss"] = r.history[e].train_loss;
    if (r.history[e].has_val) {
      rec["val_macro_f1"] = r.history[e].val.macro.f1;
      rec["val_micro_f1"] = r.history[e].val.micro.f1;
    }
    hist.push_back(std::move(rec));
  }
  extra["history"] = std::move(hist);
  write_report_files(c.out, rep, in.h, std::move(extra));
  write_text(out_path(c.out, "config.resolved"), config_str);

  std::cout << "trained " << cfg.ensemble_size << " members for " << cfg.epochs << " epochs; "
            << (have_val ? "valid" : "train") << " macro F1 " << fmt(rep.macro.f1) << "\n";
}

struct EvalCli {
  std::string data, arff, impute_from, checkpoint, out;
  double threshold = 0.5;
};

std::string resolved_config(const EvalCli& c) {
  std::string s;
  s += kv("data", c.data);
  s += kv("arff", c.arff);
  s += kv("impute-from", c.impute_from);
  s += kv("checkpoint", c.checkpoint);
  s += kv("out", c.out);
  s += kv("threshold", c.threshold);
  return s;
}

void run_eval(const EvalCli& c, const std::string& config_str) {
  if (c.threshold <= 0.0 || c.threshold > 1.0)
    throw hml::ConfigError("--threshold must be in (0,1]");
  prepare_out_dir(c.out);
  Inputs in = load_inputs(c.data, c.arff, c.impute_from);
  hml::LoadedCheckpoint ck = hml::load_checkpoint(c.checkpoint);
  if (ck.ensemble.in_dim != in.x.cols)
    throw hml::DimensionMismatch("checkpoint expects " + std::to_string(ck.ensemble.in_dim) +
                                 " features, dataset has " + std::to_string(in.x.cols));
  if (ck.ensemble.out_dim != in.h.size())
    throw hml::DimensionMismatch("checkpoint expects " + std::to_string(ck.ensemble.out_dim) +
                                 " nodes, dataset has " + std::to_string(in.h.size()));

  hml::MetricsReport rep = hml::compute_report(
      hml::f_cm(ck.ensemble.mean_forward(in.x), in.h), in.y, c.threshold);

  ordered_json extra;
  extra["evaluated_on"] = split_name(in.split);
  write_report_files(c.out, rep, in.h, std::move(extra));
  write_text(out_path(c.out, "config.resolved"), config_str);
  std::cout << "macro F1 " << fmt(rep.macro.f1) << ", micro F1 " << fmt(rep.micro.f1) << "\n";
}

struct SynthCli {
  std::size_t n_nodes = 200;
  int max_depth = 5;
  std::size_t branching = 3;
  std::size_t dag_extra_edges = 0;
  std::size_t n_obs = 2000;
  double tail = 1.5;
  std::size_t feature_dim = 32;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

std::string resolved_config(const SynthCli& c) {
  std::string s;
  s += kv("n-nodes", c.n_nodes);
  s += kv("max-depth", c.max_depth);
  s += kv("branching", c.branching);
  s += kv("dag-extra-edges", c.dag_extra_edges);
  s += kv("n-obs", c.n_obs);
  s += kv("tail", c.tail);
  s += kv("feature-dim", c.feature_dim);
  s += kv("noise-sigma", c.noise_sigma);
  s += kv("seed", c.seed);
  s += kv("out", c.out);
  return s;
}

void run_synth(const SynthCli& c, const std::string& config_str) {
  prepare_out_dir(c.out);
  hml::SynthSpec spec;
  spec.n_nodes = c.n_nodes;
  spec.max_depth = c.max_depth;
  spec.branching = c.branching;
  spec.dag_extra_edges = c.dag_extra_edges;
  spec.n_obs = c.n_obs;
  spec.tail_exponent = c.tail;
  spec.feature_dim = c.feature_dim;
  spec.noise_sigma = c.noise_sigma;
  spec.seed = c.seed;
  hml::SynthResult r = hml::synth(spec);
  hml::save_dataset(r.train, r.hierarchy, out_path(c.out, "train.bin"));
  hml::save_dataset(r.valid, r.hierarchy, out_path(c.out, "valid.bin"));
  hml::save_dataset(r.test, r.hierarchy, out_path(c.out, "test.bin"));
  write_text(out_path(c.out, "config.resolved"), config_str);
  std::cout << "wrote " << r.train.features.rows << "/" << r.valid.features.rows << "/"
            << r.test.features.rows << " rows over " << r.hierarchy.size() << " nodes to " << c.out
            << "\n";
}

struct ResampleCli {
  std::string data, arff, out;
  std::string method = "lpros";
  double pct = 1.0;
  std::uint64_t seed = 0;
};

std::string resolved_config(const ResampleCli& c) {
  std::string s;
  s += kv("data", c.data);
  s += kv("arff", c.arff);
  s += kv("method", c.method);
  s += kv("pct", c.pct);
  s += kv("seed", c.seed);
  s += kv("out", c.out);
  return s;
}

void run_resample(const ResampleCli& c, const std::string& config_str) {
  if (c.pct < 0.0) throw hml::ConfigError("--pct must be non-negative");
  prepare_out_dir(c.out);
  Inputs in = load_inputs(c.data, c.arff, "");
  hml::ResamplePlan plan = c.method == "hros-pd" ? hml::hros_pd(in.y, in.h, c.seed)
                                                 : hml::lpros(in.y, c.pct, c.seed);
  std::string plan_txt;
  for (std::size_t idx : plan.indices) plan_txt += std::to_string(idx) + "\n";
  write_text(out_path(c.out, "plan.txt"), plan_txt);

  hml::Dataset d;
  d.features = hml::take_rows(in.x, plan.indices);
  d.labels = hml::take_rows(in.y, plan.indices);
  d.split = hml::SplitTag::train;
  hml::save_dataset(d, in.h, out_path(c.out, "resampled.bin"));
  write_text(out_path(c.out, "config.resolved"), config_str);
  std::cout << "plan keeps " << in.y.rows << " originals and adds "
            << plan.indices.size() - in.y.rows << " clones\n";
}

struct InspectCli {
  std::string data, arff, out;
  double w0 = 0.25;
  std::string n_classes_mode = "nodes";
};

std::string resolved_config(const InspectCli& c) {
  std::string s;
  s += kv("data", c.data);
  s += kv("arff", c.arff);
  s += kv("w0", c.w0);
  s += kv("n-classes-mode", c.n_classes_mode);
  s += kv("out", c.out);
  return s;
}

void run_inspect(const InspectCli& c, const std::string& config_str) {
  if (c.w0 < 0.0) throw hml::ConfigError("--w0 must be non-negative");
  prepare_out_dir(c.out);
  Inputs in = load_inputs(c.data, c.arff, "");
  hml::NodeFrequencies nf = hml::node_frequencies(in.y);
  std::vector<double> raw = hml::raw_weights(nf, parse_n_classes(c.n_classes_mode));
  std::vector<double> scaled = hml::rescale_weights(raw, c.w0);

  std::vector<std::size_t> order(in.h.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&nf](std::size_t a, std::size_t b) {
    if (nf.counts[a] != nf.counts[b]) return nf.counts[a] > nf.counts[b];
    return a < b;
  });

  std::string table = "node,count,frequency,raw_weight,rescaled_weight\n";
  for (std::size_t i : order)
    table += in.h.node_ids[i] + "," + std::to_string(nf.counts[i]) + "," + fmt(nf.freq[i]) + "," +
             fmt(raw[i]) + "," + fmt(scaled[i]) + "\n";
  std::cout << table;
  write_text(out_path(c.out, "config.resolved"), config_str);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchy-constrained multi-label training toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_file;
  const std::string config_help = "read defaults from a key=value file; explicit flags win";

  TrainCli tc;
  tc.out = default_out_dir();
  CLI::App* train_cmd = app.add_subcommand("train", "train an ensemble on a labeled dataset");
  train_cmd->add_option("--config", config_file, config_help);
  add_input_options(train_cmd, tc.data, tc.arff);
  train_cmd->add_option("--val", tc.val_data, "validation dataset container");
  train_cmd->add_option("--val-arff", tc.val_arff, "validation ARFF file");
  train_cmd->add_option("--out", tc.out, "output directory");
  train_cmd->add_option("--lr", tc.lr, "learning rate");
  train_cmd->add_option("--epochs", tc.epochs, "training epochs");
  train_cmd->add_option("--batch", tc.batch, "batch size");
  train_cmd->add_flag("--no-imbalance", tc.no_imbalance, "disable imbalance weighting");
  train_cmd->add_option("--w0", tc.w0, "rescaled-weight floor");
  train_cmd->add_option("--n-classes-mode", tc.n_classes_mode, "weight denominator")
      ->check(CLI::IsMember({"nodes", "binary"}));
  train_cmd->add_option("--focal", tc.focal, "uncertainty focal weighting")
      ->check(CLI::IsMember({"none", "bbma", "gmu", "ep-kl", "ep-js"}));
  train_cmd->add_option("--u0", tc.u0, "focal weight offset");
  train_cmd->add_option("--focal-k", tc.focal_k, "focal weight exponent");
  train_cmd->add_option("--uncertainty-source", tc.uncertainty_source, "focal input source")
      ->check(CLI::IsMember({"ensemble", "dropout"}));
  train_cmd->add_option("--dropout-passes", tc.dropout_passes,
                        "stochastic passes for the dropout source; 0 uses the ensemble size");
  train_cmd->add_flag("--post-constraint", tc.post_constraint,
                      "compute uncertainty after the hierarchy constraint");
  train_cmd->add_option("--scheduler", tc.scheduler, "imbalance weight schedule")
      ->check(CLI::IsMember({"none", "linear", "exp", "alt", "mixed"}));
  train_cmd->add_option("--scheduler-k", tc.scheduler_k, "exponential schedule power");
  train_cmd->add_option("--lambda", tc.lambda, "mixed objective blend");
  train_cmd->add_option("--ensemble-size", tc.ensemble_size, "ensemble members");
  train_cmd->add_option("--ensemble-mode", tc.ensemble_mode, "member parameter layout")
      ->check(CLI::IsMember({"independent", "shared"}));
  train_cmd->add_flag("--unfreeze-trunk", tc.unfreeze_trunk,
                      "train the shared trunk instead of freezing it");
  train_cmd->add_option("--hidden", tc.hidden, "hidden width");
  train_cmd->add_option("--dropout", tc.dropout, "dropout rate");
  train_cmd->add_option("--seed", tc.seed, "random seed");
  train_cmd->add_option("--threshold", tc.threshold, "decision threshold");

  EvalCli ec;
  ec.out = default_out_dir();
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--config", config_file, config_help);
  add_input_options(eval_cmd, ec.data, ec.arff);
  eval_cmd->add_option("--impute-from", ec.impute_from,
                       "ARFF file supplying imputation column means");
  eval_cmd->add_option("--checkpoint", ec.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--out", ec.out, "output directory");
  eval_cmd->add_option("--threshold", ec.threshold, "decision threshold");

  SynthCli sc;
  sc.out = default_out_dir();
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a long-tailed synthetic dataset");
  synth_cmd->add_option("--config", config_file, config_help);
  synth_cmd->add_option("--n-nodes", sc.n_nodes, "hierarchy size");
  synth_cmd->add_option("--max-depth", sc.max_depth, "maximum depth");
  synth_cmd->add_option("--branching", sc.branching, "children per node");
  synth_cmd->add_option("--dag-extra-edges", sc.dag_extra_edges, "extra cross edges");
  synth_cmd->add_option("--n-obs", sc.n_obs, "total observations");
  synth_cmd->add_option("--tail", sc.tail, "popularity tail exponent");
  synth_cmd->add_option("--feature-dim", sc.feature_dim, "feature dimension");
  synth_cmd->add_option("--noise-sigma", sc.noise_sigma, "feature noise scale");
  synth_cmd->add_option("--seed", sc.seed, "random seed");
  synth_cmd->add_option("--out", sc.out, "output directory");

  ResampleCli rc;
  rc.out = default_out_dir();
  CLI::App* resample_cmd = app.add_subcommand("resample", "oversample rare labelsets or nodes");
  resample_cmd->add_option("--config", config_file, config_help);
  add_input_options(resample_cmd, rc.data, rc.arff);
  resample_cmd->add_option("--method", rc.method, "resampling method")
      ->check(CLI::IsMember({"lpros", "hros-pd"}));
  resample_cmd->add_option("--pct", rc.pct, "clone budget as a fraction of the rows");
  resample_cmd->add_option("--seed", rc.seed, "random seed");
  resample_cmd->add_option("--out", rc.out, "output directory");

  InspectCli ic;
  ic.out = default_out_dir();
  CLI::App* inspect_cmd =
      app.add_subcommand("inspect-weights", "print per-node imbalance weights");
  inspect_cmd->add_option("--config", config_file, config_help);
  add_input_options(inspect_cmd, ic.data, ic.arff);
  inspect_cmd->add_option("--w0", ic.w0, "rescaled-weight floor");
  inspect_cmd->add_option("--n-classes-mode", ic.n_classes_mode, "weight denominator")
      ->check(CLI::IsMember({"nodes", "binary"}));
  inspect_cmd->add_option("--out", ic.out, "output directory");

  std::vector<std::string> args;
  try {
    args = effective_args(argc, argv);
  } catch (const hml::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed())
      run_train(tc, resolved_config(tc));
    else if (eval_cmd->parsed())
      run_eval(ec, resolved_config(ec));
    else if (synth_cmd->parsed())
      run_synth(sc, resolved_config(sc));
    else if (resample_cmd->parsed())
      run_resample(rc, resolved_config(rc));
    else if (inspect_cmd->parsed())
      run_inspect(ic, resolved_config(ic));
    return 0;
  } catch (const hml::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const hml::DimensionMismatch& e) {
    std::cerr << "dimension mismatch: " << e.what() << "\n";
    return 2;
  } catch (const hml::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
