#include "hml/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "hml/constraint.hpp"
#include "hml/errors.hpp"

namespace hml {

Mat dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  Mat mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& x : mask.v) x = (rng.uniform() >= rate) ? keep_scale : 0.0;
  return mask;
}

Mlp Mlp::init(std::size_t in, std::size_t hid, std::size_t out, double drop, Rng& rng) {
  Mlp m;
  m.in_dim = in;
  m.hidden = hid;
  m.out_dim = out;
  m.dropout_rate = drop;
  auto fill = [&rng](Mat& w, std::size_t r, std::size_t c, double stddev) {
    w = Mat(r, c);
    for (double& x : w.v) x = rng.normal(0.0, stddev);
  };
  fill(m.w1, in, hid, std::sqrt(2.0 / static_cast<double>(in)));
  m.b1 = Mat(1, hid);
  fill(m.w2, hid, hid, std::sqrt(2.0 / static_cast<double>(hid)));
  m.b2 = Mat(1, hid);
  fill(m.w3, hid, out, std::sqrt(1.0 / static_cast<double>(hid)));
  m.b3 = Mat(1, out);
  return m;
}

namespace {

void affine_rows(Mat& m, const Mat& bias) {
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) += bias.v[c];
}

}  // namespace

Mat Mlp::forward(const Mat& x, bool dropout_on, Rng* rng) const {
  if (x.cols != in_dim)
    throw ShapeError("forward: input width " + std::to_string(x.cols) + ", expected " +
                     std::to_string(in_dim));
  const bool drop = dropout_on && dropout_rate > 0.0;
  Mat h1 = matmul(x, w1);
  affine_rows(h1, b1);
  for (double& v : h1.v) v = std::max(v, 0.0);
  if (drop) h1 = hadamard(h1, dropout_mask(h1.rows, h1.cols, dropout_rate, *rng));
  Mat h2 = matmul(h1, w2);
  affine_rows(h2, b2);
  for (double& v : h2.v) v = std::max(v, 0.0);
  if (drop) h2 = hadamard(h2, dropout_mask(h2.rows, h2.cols, dropout_rate, *rng));
  Mat out = matmul(h2, w3);
  affine_rows(out, b3);
  for (double& v : out.v) v = 1.0 / (1.0 + std::exp(-v));
  return out;
}

TapeMlp tape_forward(Tape& tape, const Mlp& m, Tape::NodeId x, bool dropout_on, Rng* rng) {
  const bool drop = dropout_on && m.dropout_rate > 0.0;
  const std::size_t batch = tape.value(x).rows;
  TapeMlp r;
  r.param_ids = {tape.leaf(m.w1), tape.leaf(m.b1), tape.leaf(m.w2),
                 tape.leaf(m.b2), tape.leaf(m.w3), tape.leaf(m.b3)};
  Tape::NodeId h1 = tape.relu(tape.add_row(tape.matmul(x, r.param_ids[0]), r.param_ids[1]));
  if (drop) h1 = tape.mul_const(h1, dropout_mask(batch, m.hidden, m.dropout_rate, *rng));
  Tape::NodeId h2 = tape.relu(tape.add_row(tape.matmul(h1, r.param_ids[2]), r.param_ids[3]));
  if (drop) h2 = tape.mul_const(h2, dropout_mask(batch, m.hidden, m.dropout_rate, *rng));
  r.out = tape.sigmoid(tape.add_row(tape.matmul(h2, r.param_ids[4]), r.param_ids[5]));
  return r;
}

EnsembleOutput mc_dropout_probs(const Mlp& model, const Mat& x, std::size_t passes, Rng& rng) {
  std::vector<Mat> mp;
  mp.reserve(passes);
  for (std::size_t p = 0; p < passes; ++p) mp.push_back(model.forward(x, true, &rng));
  return ensemble_stats(std::move(mp));
}

void Adam::step(const std::vector<Mat*>& params, const std::vector<const Mat*>& grads) {
  if (params.size() != grads.size()) throw Error("adam: param/grad count mismatch");
  if (slots.empty()) {
    slots.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      slots[i].m = Mat(params[i]->rows, params[i]->cols);
      slots[i].v = Mat(params[i]->rows, params[i]->cols);
    }
  }
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Mat& p = *params[i];
    const Mat& g = *grads[i];
    Slot& s = slots[i];
    for (std::size_t j = 0; j < p.v.size(); ++j) {
      s.m.v[j] = beta1 * s.m.v[j] + (1.0 - beta1) * g.v[j];
      s.v.v[j] = beta2 * s.v.v[j] + (1.0 - beta2) * g.v[j] * g.v[j];
      p.v[j] -= lr * (s.m.v[j] / c1) / (std::sqrt(s.v.v[j] / c2) + eps);
    }
  }
}

Ensemble Ensemble::init(EnsembleMode mode, std::size_t m_count, std::size_t in, std::size_t hid,
                        std::size_t out, double drop, std::uint64_t seed, bool trunk_frozen) {
  if (m_count == 0) throw Error("ensemble needs at least one member");
  Ensemble e;
  e.mode = mode;
  e.trunk_frozen = trunk_frozen;
  e.in_dim = in;
  e.hidden = hid;
  e.out_dim = out;
  e.dropout_rate = drop;
  if (mode == EnsembleMode::independent) {
    e.members.reserve(m_count);
    for (std::size_t i = 0; i < m_count; ++i) {
      Rng rng(seed, 10 + i);
      e.members.push_back(Mlp::init(in, hid, out, drop, rng));
    }
  } else {
    Rng trng(seed, 10);
    Mlp proto = Mlp::init(in, hid, out, drop, trng);
    e.trunk = {proto.w1, proto.b1, proto.w2, proto.b2};
    e.heads.reserve(m_count);
    for (std::size_t i = 0; i < m_count; ++i) {
      Rng hrng(seed, 20 + i);
      Mat w3(hid, out);
      const double stddev = std::sqrt(1.0 / static_cast<double>(hid));
      for (double& x : w3.v) x = hrng.normal(0.0, stddev);
      e.heads.push_back({std::move(w3), Mat(1, out)});
    }
  }
  return e;
}

Mlp Ensemble::member_view(std::size_t i) const {
  Mlp m;
  m.in_dim = in_dim;
  m.hidden = hidden;
  m.out_dim = out_dim;
  m.dropout_rate = dropout_rate;
  if (mode == EnsembleMode::independent) return members[i];
  m.w1 = trunk.w1;
  m.b1 = trunk.b1;
  m.w2 = trunk.w2;
  m.b2 = trunk.b2;
  m.w3 = heads[i].w3;
  m.b3 = heads[i].b3;
  return m;
}

Mat Ensemble::member_forward(std::size_t i, const Mat& x, bool dropout_on, Rng* rng) const {
  if (mode == EnsembleMode::independent) return members[i].forward(x, dropout_on, rng);
  return member_view(i).forward(x, dropout_on, rng);
}

Mat Ensemble::mean_forward(const Mat& x) const {
  Mat acc;
  const std::size_t m_count = size();
  for (std::size_t i = 0; i < m_count; ++i) {
    Mat out = member_forward(i, x);
    if (acc.v.empty())
      acc = std::move(out);
    else
      for (std::size_t j = 0; j < acc.v.size(); ++j) acc.v[j] += out.v[j];
  }
  for (double& v : acc.v) v /= static_cast<double>(m_count);
  return acc;
}

namespace {

Mat grad_or_zeros(const Tape& tape, Tape::NodeId id, const Mat& like) {
  const Mat& g = tape.grad(id);
  if (g.v.empty()) return Mat(like.rows, like.cols);
  return g;
}

Mat focal_matrix(const std::vector<Mat>& member_probs, const Ensemble& ens, const Mat& xb,
                 const Hierarchy& h, const TrainConfig& cfg, Rng& mc_rng) {
  if (cfg.focal == FocalKind::none)
    return Mat(member_probs[0].rows, member_probs[0].cols, 1.0);
  std::vector<Mat> source;
  if (cfg.uncertainty_source == UncertaintySource::dropout) {
    const std::size_t passes = cfg.dropout_passes ? cfg.dropout_passes : cfg.ensemble_size;
    Mlp m0 = ens.member_view(0);
    source.reserve(passes);
    for (std::size_t p = 0; p < passes; ++p) source.push_back(m0.forward(xb, true, &mc_rng));
  } else {
    source = member_probs;
  }
  if (cfg.uncertainty_post_constraint)
    for (Mat& m : source) m = f_cm(m, h);
  Mat u;
  switch (cfg.focal) {
    case FocalKind::bbma:
      u = u_bbma(ensemble_stats(std::move(source)));
      break;
    case FocalKind::gmu:
      u = u_gmu(ensemble_stats(std::move(source)));
      break;
    case FocalKind::ep_kl:
      u = u_epistemic(source, Divergence::kl);
      break;
    case FocalKind::ep_js:
      u = u_epistemic(source, Divergence::js);
      break;
    case FocalKind::none:
      return Mat(member_probs[0].rows, member_probs[0].cols, 1.0);
  }
  return focal_weights(u, cfg.u0, cfg.focal_k).combined;
}

}  // namespace

TrainResult train(const Mat& x, const Mat& y, const Mat* x_val, const Mat* y_val,
                  const Hierarchy& h, const TrainConfig& cfg) {
  if (x.rows != y.rows) throw ShapeError("train: feature/label row mismatch");
  if (y.cols != h.size()) throw ShapeError("train: label width does not match hierarchy");
  if (x.rows == 0) throw Error("train: empty dataset");
  if (cfg.epochs == 0 || cfg.batch_size == 0 || cfg.ensemble_size == 0)
    throw Error("train: epochs, batch_size, ensemble_size must be positive");

  const std::size_t m_count = cfg.ensemble_size;
  TrainResult result;
  result.ensemble = Ensemble::init(cfg.mode, m_count, x.cols, cfg.hidden, h.size(),
                                   cfg.dropout_rate, cfg.seed, cfg.trunk_frozen);
  Ensemble& ens = result.ensemble;

  std::vector<double> w_tilde;
  if (cfg.imbalance_on)
    w_tilde = rescale_weights(raw_weights(node_frequencies(y), cfg.n_classes_mode), cfg.w0);

  Rng shuffle_rng(cfg.seed, 2);
  Rng mc_rng(cfg.seed, 3);
  Rng trunk_drop_rng(cfg.seed, 999);
  std::vector<Rng> drop_rngs;
  drop_rngs.reserve(m_count);
  for (std::size_t i = 0; i < m_count; ++i) drop_rngs.emplace_back(cfg.seed, 1000 + i);

  std::vector<Adam> member_opts(m_count);
  for (Adam& a : member_opts) a.lr = cfg.lr;
  Adam trunk_opt;
  trunk_opt.lr = cfg.lr;

  const std::size_t n = x.rows;
  const std::size_t n_batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_acc = 0.0;

    for (std::size_t bi = 0; bi < n_batches; ++bi) {
      const std::size_t lo = bi * cfg.batch_size;
      const std::size_t hi = std::min(n, lo + cfg.batch_size);
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                    order.begin() + static_cast<std::ptrdiff_t>(hi));
      const Mat xb = take_rows(x, rows);
      const Mat yb = take_rows(y, rows);

      Tape tape;
      const Tape::NodeId xnode = tape.constant(xb);

      std::vector<std::array<Tape::NodeId, 6>> member_param_ids;
      std::vector<std::array<Tape::NodeId, 2>> head_param_ids;
      std::array<Tape::NodeId, 4> trunk_param_ids{};
      std::vector<Tape::NodeId> outs(m_count);

      if (cfg.mode == EnsembleMode::independent) {
        member_param_ids.resize(m_count);
        for (std::size_t i = 0; i < m_count; ++i) {
          TapeMlp f = tape_forward(tape, ens.members[i], xnode, true, &drop_rngs[i]);
          member_param_ids[i] = f.param_ids;
          outs[i] = f.out;
        }
      } else {
        const bool drop = cfg.dropout_rate > 0.0;
        trunk_param_ids = {tape.leaf(ens.trunk.w1), tape.leaf(ens.trunk.b1),
                           tape.leaf(ens.trunk.w2), tape.leaf(ens.trunk.b2)};
        Tape::NodeId h1 =
            tape.relu(tape.add_row(tape.matmul(xnode, trunk_param_ids[0]), trunk_param_ids[1]));
        if (drop)
          h1 = tape.mul_const(
              h1, dropout_mask(xb.rows, cfg.hidden, cfg.dropout_rate, trunk_drop_rng));
        Tape::NodeId h2 =
            tape.relu(tape.add_row(tape.matmul(h1, trunk_param_ids[2]), trunk_param_ids[3]));
        if (drop)
          h2 = tape.mul_const(
              h2, dropout_mask(xb.rows, cfg.hidden, cfg.dropout_rate, trunk_drop_rng));
        head_param_ids.resize(m_count);
        for (std::size_t i = 0; i < m_count; ++i) {
          head_param_ids[i] = {tape.leaf(ens.heads[i].w3), tape.leaf(ens.heads[i].b3)};
          outs[i] = tape.sigmoid(
              tape.add_row(tape.matmul(h2, head_param_ids[i][0]), head_param_ids[i][1]));
        }
      }

      std::vector<Mat> probs;
      probs.reserve(m_count);
      for (std::size_t i = 0; i < m_count; ++i) probs.push_back(tape.value(outs[i]));

      const Mat focal = focal_matrix(probs, ens, xb, h, cfg, mc_rng);

      SchedulerState st;
      st.kind = cfg.scheduler;
      st.k_exp = cfg.scheduler_k;
      st.lambda = cfg.lambda;
      st.n_steps = n_batches;
      st.t = bi;
      Mat weights(yb.rows, yb.cols, 1.0);
      if (cfg.imbalance_on) weights = weight_matrix(scheduled_weights(w_tilde, st), yb);

      Mat one_minus_y(yb.rows, yb.cols);
      for (std::size_t i = 0; i < yb.v.size(); ++i) one_minus_y.v[i] = 1.0 - yb.v[i];

      Tape::NodeId root = -1;
      const bool mixed = cfg.scheduler == SchedulerKind::mixed && cfg.imbalance_on;
      for (std::size_t i = 0; i < m_count; ++i) {
        Tape::NodeId y_a = tape.cm_max(outs[i], h);
        Tape::NodeId y_b = tape.cm_max(tape.mul_const(outs[i], yb), h);
        Tape::NodeId y_t = tape.add(tape.mul_const(y_a, one_minus_y), y_b);
        Tape::NodeId loss_mat = tape.bce(y_t, yb);
        Tape::NodeId loss_i;
        if (mixed) {
          Tape::NodeId lw = tape.mean(tape.mul_const(loss_mat, hadamard(weights, focal)));
          Tape::NodeId lu = tape.mean(tape.mul_const(loss_mat, focal));
          loss_i = tape.add(tape.scale(lw, cfg.lambda), tape.scale(lu, 1.0 - cfg.lambda));
        } else {
          loss_i = tape.mean(tape.mul_const(loss_mat, hadamard(weights, focal)));
        }
        const double lv = tape.value(loss_i).v[0];
        if (!std::isfinite(lv))
          throw TrainDiverged("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                              std::to_string(bi) + "; lower the learning rate");
        loss_acc += lv;
        root = (root < 0) ? loss_i : tape.add(root, loss_i);
      }

      tape.backward(root);

      if (cfg.mode == EnsembleMode::independent) {
        for (std::size_t i = 0; i < m_count; ++i) {
          auto ps = ens.members[i].params();
          std::vector<Mat> grads;
          grads.reserve(6);
          for (std::size_t k = 0; k < 6; ++k)
            grads.push_back(grad_or_zeros(tape, member_param_ids[i][k], *ps[k]));
          std::vector<Mat*> pv(ps.begin(), ps.end());
          std::vector<const Mat*> gv;
          for (const Mat& g : grads) gv.push_back(&g);
          member_opts[i].step(pv, gv);
        }
      } else {
        for (std::size_t i = 0; i < m_count; ++i) {
          std::vector<Mat*> pv = {&ens.heads[i].w3, &ens.heads[i].b3};
          std::vector<Mat> grads = {grad_or_zeros(tape, head_param_ids[i][0], ens.heads[i].w3),
                                    grad_or_zeros(tape, head_param_ids[i][1], ens.heads[i].b3)};
          std::vector<const Mat*> gv = {&grads[0], &grads[1]};
          member_opts[i].step(pv, gv);
        }
        if (!cfg.trunk_frozen) {
          std::vector<Mat*> pv = {&ens.trunk.w1, &ens.trunk.b1, &ens.trunk.w2, &ens.trunk.b2};
          std::vector<Mat> grads;
          grads.reserve(4);
          for (std::size_t k = 0; k < 4; ++k)
            grads.push_back(grad_or_zeros(tape, trunk_param_ids[k], *pv[k]));
          // Heads accumulate into the shared trunk; average so the step is a
          // mean-loss step rather than scaling with the ensemble size.
          for (Mat& g : grads)
            for (double& v : g.v) v /= static_cast<double>(m_count);
          std::vector<const Mat*> gv;
          for (const Mat& g : grads) gv.push_back(&g);
          trunk_opt.step(pv, gv);
        }
      }
    }

    EpochRecord rec;
    rec.train_loss = loss_acc / (static_cast<double>(n_batches) * static_cast<double>(m_count));
    if (x_val && y_val && x_val->rows > 0) {
      rec.val = compute_report(f_cm(ens.mean_forward(*x_val), h), *y_val, cfg.threshold);
      rec.has_val = true;
    }
    result.history.push_back(std::move(rec));
  }
  return result;
}

namespace {

constexpr char kCkptMagic[8] = {'H', 'M', 'L', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ofstream& f, std::uint64_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_f64(std::ofstream& f, double v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_mat(std::ofstream& f, const Mat& m) {
  write_u64(f, m.rows);
  write_u64(f, m.cols);
  f.write(reinterpret_cast<const char*>(m.v.data()),
          static_cast<std::streamsize>(m.v.size() * sizeof(double)));
}

std::uint64_t read_u64(std::ifstream& f) {
  std::uint64_t v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!f) throw ParseError("checkpoint truncated");
  return v;
}
double read_f64(std::ifstream& f) {
  double v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!f) throw ParseError("checkpoint truncated");
  return v;
}
Mat read_mat(std::ifstream& f) {
  const std::uint64_t rows = read_u64(f);
  const std::uint64_t cols = read_u64(f);
  if (rows > (1u << 24) || cols > (1u << 24) || rows * cols > (1u << 28))
    throw ParseError("checkpoint tensor dimensions implausible");
  Mat m(rows, cols);
  f.read(reinterpret_cast<char*>(m.v.data()),
         static_cast<std::streamsize>(m.v.size() * sizeof(double)));
  if (!f) throw ParseError("checkpoint truncated");
  return m;
}

}  // namespace

void save_checkpoint(const Ensemble& e, const std::string& path, std::uint64_t config_hash) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open checkpoint for writing: " + path);
  f.write(kCkptMagic, sizeof kCkptMagic);
  write_u64(f, config_hash);
  write_u64(f, e.mode == EnsembleMode::independent ? 0 : 1);
  write_u64(f, e.trunk_frozen ? 1 : 0);
  write_u64(f, e.size());
  write_u64(f, e.in_dim);
  write_u64(f, e.hidden);
  write_u64(f, e.out_dim);
  write_f64(f, e.dropout_rate);
  if (e.mode == EnsembleMode::independent) {
    for (const Mlp& m : e.members)
      for (const Mat* p : m.params()) write_mat(f, *p);
  } else {
    write_mat(f, e.trunk.w1);
    write_mat(f, e.trunk.b1);
    write_mat(f, e.trunk.w2);
    write_mat(f, e.trunk.b2);
    for (const HeadParams& hd : e.heads) {
      write_mat(f, hd.w3);
      write_mat(f, hd.b3);
    }
  }
  if (!f) throw Error("checkpoint write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, sizeof magic);
  if (!f || std::memcmp(magic, kCkptMagic, sizeof magic) != 0)
    throw ParseError("not a checkpoint file: " + path);
  LoadedCheckpoint lc;
  lc.config_hash = read_u64(f);
  const std::uint64_t mode = read_u64(f);
  const std::uint64_t frozen = read_u64(f);
  const std::uint64_t m_count = read_u64(f);
  Ensemble& e = lc.ensemble;
  e.mode = mode == 0 ? EnsembleMode::independent : EnsembleMode::shared_trunk_heads;
  e.trunk_frozen = frozen != 0;
  e.in_dim = read_u64(f);
  e.hidden = read_u64(f);
  e.out_dim = read_u64(f);
  e.dropout_rate = read_f64(f);
  if (m_count == 0 || m_count > 4096) throw ParseError("checkpoint member count implausible");
  if (e.mode == EnsembleMode::independent) {
    e.members.resize(m_count);
    for (Mlp& m : e.members) {
      m.in_dim = e.in_dim;
      m.hidden = e.hidden;
      m.out_dim = e.out_dim;
      m.dropout_rate = e.dropout_rate;
      for (Mat* p : m.params()) *p = read_mat(f);
    }
  } else {
    e.trunk.w1 = read_mat(f);
    e.trunk.b1 = read_mat(f);
    e.trunk.w2 = read_mat(f);
    e.trunk.b2 = read_mat(f);
    e.heads.resize(m_count);
    for (HeadParams& hd : e.heads) {
      hd.w3 = read_mat(f);
      hd.b3 = read_mat(f);
    }
  }
  return lc;
}

}  // namespace hml
