#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "hml/constraint.hpp"
#include "hml/data.hpp"
#include "hml/hierarchy.hpp"
#include "hml/imbalance.hpp"
#include "hml/mat.hpp"
#include "hml/metrics.hpp"
#include "hml/nn.hpp"
#include "hml/rng.hpp"
#include "hml/uncertainty.hpp"

namespace {

using namespace hml;

SynthResult make_corpus(std::size_t n_nodes, std::size_t n_obs) {
  SynthSpec spec;
  spec.n_nodes = n_nodes;
  spec.max_depth = 8;  // room for the largest node counts below
  spec.n_obs = n_obs;
  spec.seed = 42;
  return synth(spec);
}

// Marks every node positive at least once so weight computation stays on the
// warning-free path.
void ensure_coverage(Mat& labels, const Hierarchy& h) {
  for (std::size_t i = 0; i < h.size(); ++i) labels(i % labels.rows, i) = 1.0;
  labels = close_labels(labels, h);
}

Mat random_probs(Rng& rng, std::size_t rows, std::size_t cols) {
  Mat p(rows, cols, 0.0);
  for (double& v : p.v) v = rng.uniform(0.01, 0.99);
  return p;
}

void bm_f_cm(benchmark::State& state) {
  const std::size_t n_nodes = static_cast<std::size_t>(state.range(0));
  SynthResult corpus = make_corpus(n_nodes, 64);
  Rng rng(1);
  Mat probs = random_probs(rng, 64, corpus.hierarchy.size());
  for (auto _ : state) {
    Mat out = f_cm(probs, corpus.hierarchy);
    benchmark::DoNotOptimize(out.v.data());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(bm_f_cm)->Arg(50)->Arg(200)->Arg(800)->Unit(benchmark::kMicrosecond);

void bm_mcm_forward(benchmark::State& state) {
  const std::size_t n_nodes = static_cast<std::size_t>(state.range(0));
  SynthResult corpus = make_corpus(n_nodes, 64);
  Rng rng(2);
  Mat probs = random_probs(rng, corpus.train.labels.rows, corpus.hierarchy.size());
  for (auto _ : state) {
    ConstrainedOutputs out = mcm_forward(probs, corpus.train.labels, corpus.hierarchy);
    benchmark::DoNotOptimize(out.y_tilde.v.data());
  }
  state.SetItemsProcessed(state.iterations() * corpus.train.labels.rows);
}
BENCHMARK(bm_mcm_forward)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

void bm_close_labels(benchmark::State& state) {
  SynthResult corpus = make_corpus(200, 512);
  for (auto _ : state) {
    Mat closed = close_labels(corpus.train.labels, corpus.hierarchy);
    benchmark::DoNotOptimize(closed.v.data());
  }
  state.SetItemsProcessed(state.iterations() * corpus.train.labels.rows);
}
BENCHMARK(bm_close_labels)->Unit(benchmark::kMicrosecond);

void bm_train_epoch(benchmark::State& state) {
  SynthResult corpus = make_corpus(100, 256);
  ensure_coverage(corpus.train.labels, corpus.hierarchy);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 32;
  cfg.ensemble_size = 2;
  cfg.hidden = 32;
  cfg.dropout_rate = 0.0;
  cfg.lr = 1e-3;
  for (auto _ : state) {
    TrainResult r = train(corpus.train.features, corpus.train.labels, nullptr, nullptr,
                          corpus.hierarchy, cfg);
    benchmark::DoNotOptimize(r.history.data());
  }
  state.SetItemsProcessed(state.iterations() * corpus.train.features.rows);
}
BENCHMARK(bm_train_epoch)->Unit(benchmark::kMillisecond);

void bm_train_epoch_focal(benchmark::State& state) {
  SynthResult corpus = make_corpus(100, 256);
  ensure_coverage(corpus.train.labels, corpus.hierarchy);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 32;
  cfg.ensemble_size = 2;
  cfg.hidden = 32;
  cfg.dropout_rate = 0.0;
  cfg.lr = 1e-3;
  cfg.focal = FocalKind::gmu;
  for (auto _ : state) {
    TrainResult r = train(corpus.train.features, corpus.train.labels, nullptr, nullptr,
                          corpus.hierarchy, cfg);
    benchmark::DoNotOptimize(r.history.data());
  }
  state.SetItemsProcessed(state.iterations() * corpus.train.features.rows);
}
BENCHMARK(bm_train_epoch_focal)->Unit(benchmark::kMillisecond);

std::vector<Mat> member_grid(std::size_t m, std::size_t rows, std::size_t cols) {
  Rng rng(7);
  std::vector<Mat> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(random_probs(rng, rows, cols));
  return out;
}

void bm_u_bbma(benchmark::State& state) {
  EnsembleOutput e = ensemble_stats(member_grid(10, 64, 200));
  for (auto _ : state) {
    Mat u = u_bbma(e);
    benchmark::DoNotOptimize(u.v.data());
  }
  state.SetItemsProcessed(state.iterations() * 64 * 200);
}
BENCHMARK(bm_u_bbma)->Unit(benchmark::kMicrosecond);

void bm_u_gmu(benchmark::State& state) {
  EnsembleOutput e = ensemble_stats(member_grid(10, 64, 200));
  for (auto _ : state) {
    Mat u = u_gmu(e);
    benchmark::DoNotOptimize(u.v.data());
  }
  state.SetItemsProcessed(state.iterations() * 64 * 200);
}
BENCHMARK(bm_u_gmu)->Unit(benchmark::kMicrosecond);

void bm_u_epistemic(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  Divergence d = state.range(1) == 0 ? Divergence::kl : Divergence::js;
  std::vector<Mat> members = member_grid(m, 64, 200);
  for (auto _ : state) {
    Mat u = u_epistemic(members, d);
    benchmark::DoNotOptimize(u.v.data());
  }
  // Pairwise divergences dominate; report cells so member counts stay comparable.
  state.SetItemsProcessed(state.iterations() * 64 * 200);
}
BENCHMARK(bm_u_epistemic)
    ->Args({5, 0})
    ->Args({10, 0})
    ->Args({10, 1})
    ->Unit(benchmark::kMicrosecond);

void bm_average_precision(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(0));
  Rng rng(9);
  std::vector<double> scores(rows), labels(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.uniform() < 0.2 ? 1.0 : 0.0;
  }
  labels[0] = 1.0;
  for (auto _ : state) {
    double ap = average_precision(scores, labels);
    benchmark::DoNotOptimize(ap);
  }
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(bm_average_precision)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);

void bm_compute_report(benchmark::State& state) {
  SynthResult corpus = make_corpus(200, 512);
  Rng rng(11);
  Mat raw = random_probs(rng, corpus.test.labels.rows, corpus.hierarchy.size());
  Mat constrained = f_cm(raw, corpus.hierarchy);
  for (auto _ : state) {
    MetricsReport r = compute_report(constrained, corpus.test.labels, 0.5);
    benchmark::DoNotOptimize(r.per_node.data());
  }
  state.SetItemsProcessed(state.iterations() * corpus.test.labels.rows);
}
BENCHMARK(bm_compute_report)->Unit(benchmark::kMillisecond);

void bm_imbalance_weights(benchmark::State& state) {
  NodeFrequencies nf;
  nf.total_obs = 4096;
  nf.counts.resize(800);
  nf.freq.resize(800);
  for (std::size_t i = 0; i < nf.counts.size(); ++i) {
    nf.counts[i] = 1 + (i * 37) % nf.total_obs;
    nf.freq[i] = static_cast<double>(nf.counts[i]) / static_cast<double>(nf.total_obs);
  }
  for (auto _ : state) {
    std::vector<double> w =
        rescale_weights(raw_weights(nf, NClassesMode::node_count), 0.25);
    benchmark::DoNotOptimize(w.data());
  }
}
BENCHMARK(bm_imbalance_weights)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
