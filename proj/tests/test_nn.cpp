#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "helpers.hpp"
#include "hml/constraint.hpp"
#include "hml/errors.hpp"
#include "hml/imbalance.hpp"
#include "hml/nn.hpp"

using namespace hml;
using gradcheck::fd_gradients;
using gradcheck::LossSpec;
using gradcheck::mean_of;
using gradcheck::member_loss;
using gradcheck::tape_gradients;

namespace {

Hierarchy small_tree() {
  return build_hierarchy({"root", "a", "b", "a1", "a2", "b1"},
                         {{std::string("root"), std::string("a")},
                          {std::string("root"), std::string("b")},
                          {std::string("a"), std::string("a1")},
                          {std::string("a"), std::string("a2")},
                          {std::string("b"), std::string("b1")}});
}

}  // namespace

TEST_CASE("zero-parameter network outputs one half everywhere") {
  Mlp m;
  m.in_dim = 3;
  m.hidden = 4;
  m.out_dim = 2;
  m.dropout_rate = 0.0;
  m.w1 = Mat(3, 4);
  m.b1 = Mat(1, 4);
  m.w2 = Mat(4, 4);
  m.b2 = Mat(1, 4);
  m.w3 = Mat(4, 2);
  m.b3 = Mat(1, 2);
  hml::Rng rng(1);
  Mat x = hml_test::random_probs(rng, 5, 3);
  Mat out = m.forward(x);
  for (double v : out.v) CHECK(v == 0.5);
}

TEST_CASE("forward without dropout is deterministic and repeatable") {
  hml::Rng init_rng(2);
  Mlp m = Mlp::init(4, 6, 3, 0.7, init_rng);
  hml::Rng data_rng(3);
  Mat x = hml_test::random_probs(data_rng, 7, 4);
  Mat a = m.forward(x);
  Mat b = m.forward(x);
  CHECK(hml_test::max_rel_err(a, b) == 0.0);
  for (double v : a.v) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("tape forward equals plain forward for the same dropout stream") {
  hml::Rng init_rng(4);
  Mlp m = Mlp::init(5, 8, 4, 0.5, init_rng);
  hml::Rng data_rng(5);
  Mat x = hml_test::random_probs(data_rng, 6, 5);

  SUBCASE("dropout off") {
    Tape tape;
    TapeMlp f = tape_forward(tape, m, tape.constant(x), false, nullptr);
    CHECK(hml_test::max_rel_err(tape.value(f.out), m.forward(x)) == 0.0);
  }
  SUBCASE("dropout on, same rng state") {
    hml::Rng r1(9, 42);
    hml::Rng r2(9, 42);
    Tape tape;
    TapeMlp f = tape_forward(tape, m, tape.constant(x), true, &r1);
    Mat plain = m.forward(x, true, &r2);
    CHECK(hml_test::max_rel_err(tape.value(f.out), plain) == 0.0);
  }
}

TEST_CASE("dropout mask has inverted scaling and the configured drop rate") {
  hml::Rng rng(6);
  const double rate = 0.7;
  Mat mask = dropout_mask(100, 100, rate, rng);
  std::size_t zeros = 0;
  for (double v : mask.v) {
    if (v == 0.0)
      ++zeros;
    else
      CHECK(v == doctest::Approx(1.0 / 0.3).epsilon(1e-12));
  }
  const double frac = static_cast<double>(zeros) / 10000.0;
  CHECK(frac > 0.68);
  CHECK(frac < 0.72);
}

TEST_CASE("adam ignores zero gradients and first step has learning-rate magnitude") {
  Adam opt;
  opt.lr = 1e-4;
  Mat p(2, 2);
  p(0, 0) = 0.5;
  p(1, 1) = -0.25;
  const Mat before = p;
  Mat g(2, 2);

  opt.step({&p}, {&g});
  CHECK(hml_test::max_rel_err(p, before) == 0.0);

  Adam fresh;
  fresh.lr = 1e-4;
  g(0, 0) = 0.3;
  g(0, 1) = -4.0;
  fresh.step({&p}, {&g});
  CHECK(std::abs(p(0, 0) - before(0, 0)) == doctest::Approx(fresh.lr).epsilon(1e-6));
  CHECK(std::abs(p(0, 1) - before(0, 1)) == doctest::Approx(fresh.lr).epsilon(1e-6));
  CHECK(p(0, 0) < before(0, 0));
  CHECK(p(0, 1) > before(0, 1));
  CHECK(p(1, 1) == before(1, 1));
}

TEST_CASE("ensemble loss gradients match finite differences in every weighting mode") {
  Hierarchy h = small_tree();
  const std::size_t m_count = 3;
  std::vector<Mlp> models;
  for (std::size_t i = 0; i < m_count; ++i) {
    hml::Rng r(100 + i);
    models.push_back(Mlp::init(4, 5, h.size(), 0.0, r));
  }
  hml::Rng data_rng(200);
  Mat x = hml_test::random_probs(data_rng, 3, 4);
  Mat y = hml_test::random_labels(data_rng, 3, h);
  y(0, 0) = 1.0;  // keep at least one positive so imbalance weights exist

  std::vector<Mat> probs;
  for (const Mlp& m : models) probs.push_back(m.forward(x));

  const std::vector<double> w_tilde =
      rescale_weights(raw_weights(node_frequencies(y), NClassesMode::node_count), 0.25);
  const Mat ones(y.rows, y.cols, 1.0);
  const Mat w_mat = weight_matrix(w_tilde, y);

  auto focal_of = [&](FocalKind kind, double u0, double k) {
    Mat u;
    switch (kind) {
      case FocalKind::bbma:
        u = u_bbma(ensemble_stats(probs));
        break;
      case FocalKind::gmu:
        u = u_gmu(ensemble_stats(probs));
        break;
      case FocalKind::ep_kl:
        u = u_epistemic(probs, Divergence::kl);
        break;
      case FocalKind::ep_js:
        u = u_epistemic(probs, Divergence::js);
        break;
      case FocalKind::none:
        return ones;
    }
    return focal_weights(u, u0, k).combined;
  };

  std::vector<std::pair<const char*, LossSpec>> specs;
  specs.push_back({"plain", {ones, ones, false, 0.5}});
  specs.push_back({"imbalance", {w_mat, ones, false, 0.5}});
  specs.push_back({"bbma", {w_mat, focal_of(FocalKind::bbma, 0.25, 1.0), false, 0.5}});
  specs.push_back({"gmu", {w_mat, focal_of(FocalKind::gmu, 0.25, 2.0), false, 0.5}});
  specs.push_back({"ep-kl", {w_mat, focal_of(FocalKind::ep_kl, 0.1, 1.0), false, 0.5}});
  specs.push_back({"ep-js", {w_mat, focal_of(FocalKind::ep_js, 0.25, 1.0), false, 0.5}});
  {
    SchedulerState st;
    st.kind = SchedulerKind::exponential;
    st.k_exp = 3.0;
    st.n_steps = 5;
    st.t = 2;
    specs.push_back({"scheduled", {weight_matrix(scheduled_weights(w_tilde, st), y), ones, false, 0.5}});
  }
  specs.push_back({"mixed", {w_mat, focal_of(FocalKind::bbma, 0.25, 1.0), true, 0.3}});

  for (const auto& [name, spec] : specs) {
    CAPTURE(name);
    auto tg = tape_gradients(models, x, y, h, spec);
    for (std::size_t i = 0; i < m_count; ++i) {
      auto fg = fd_gradients(models[i], x, y, h, spec);
      for (std::size_t k = 0; k < 6; ++k) {
        CAPTURE(i);
        CAPTURE(k);
        CHECK(hml_test::max_rel_err(tg[i][k], fg[k]) < 1e-4);
      }
    }
  }
}

TEST_CASE("uncertainty weights are constants on the tape") {
  Hierarchy h = small_tree();
  std::vector<Mlp> models;
  for (std::size_t i = 0; i < 2; ++i) {
    hml::Rng r(300 + i);
    models.push_back(Mlp::init(4, 5, h.size(), 0.0, r));
  }
  hml::Rng data_rng(301);
  Mat x = hml_test::random_probs(data_rng, 2, 4);
  Mat y = hml_test::random_labels(data_rng, 2, h);
  y(0, 0) = 1.0;

  std::vector<Mat> probs;
  for (const Mlp& m : models) probs.push_back(m.forward(x));
  Mat focal_live = focal_weights(u_gmu(ensemble_stats(probs)), 0.25, 1.0).combined;
  Mat focal_copy = focal_live;  // decoupled storage, same values

  const Mat ones(y.rows, y.cols, 1.0);
  LossSpec a{ones, focal_live, false, 0.5};
  LossSpec b{ones, focal_copy, false, 0.5};
  auto ga = tape_gradients(models, x, y, h, a);
  auto gb = tape_gradients(models, x, y, h, b);
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t k = 0; k < 6; ++k) {
      const Mat& ma = ga[i][k];
      const Mat& mb = gb[i][k];
      REQUIRE(ma.v.size() == mb.v.size());
      for (std::size_t j = 0; j < ma.v.size(); ++j) CHECK(std::abs(ma.v[j] - mb.v[j]) <= 1e-12);
    }
}

TEST_CASE("mc-dropout passes are seed-deterministic and collapse at rate zero") {
  hml::Rng init_rng(7);
  Mlp m = Mlp::init(4, 6, 3, 0.7, init_rng);
  hml::Rng data_rng(8);
  Mat x = hml_test::random_probs(data_rng, 5, 4);

  hml::Rng r1(11, 3), r2(11, 3);
  EnsembleOutput a = mc_dropout_probs(m, x, 6, r1);
  EnsembleOutput b = mc_dropout_probs(m, x, 6, r2);
  CHECK(hml_test::max_rel_err(a.mean, b.mean) == 0.0);
  CHECK(hml_test::max_rel_err(a.var, b.var) == 0.0);
  bool any_var = false;
  for (double v : a.var.v) any_var = any_var || v > 0.0;
  CHECK(any_var);

  // Identical passes leave only summation rounding in the moments.
  Mlp frozen = m;
  frozen.dropout_rate = 0.0;
  hml::Rng r3(11, 3);
  EnsembleOutput c = mc_dropout_probs(frozen, x, 6, r3);
  for (double v : c.var.v) CHECK(v <= 1e-30);
  CHECK(hml_test::max_rel_err(c.mean, frozen.forward(x)) < 1e-15);
}

TEST_CASE("ensemble member views and mean forward agree across modes") {
  hml::Rng data_rng(9);
  Mat x = hml_test::random_probs(data_rng, 4, 5);

  for (EnsembleMode mode : {EnsembleMode::independent, EnsembleMode::shared_trunk_heads}) {
    Ensemble e = Ensemble::init(mode, 3, 5, 6, 4, 0.0, 77, true);
    REQUIRE(e.size() == 3);
    Mat acc;
    for (std::size_t i = 0; i < 3; ++i) {
      Mat direct = e.member_forward(i, x);
      Mat via_view = e.member_view(i).forward(x);
      CHECK(hml_test::max_rel_err(direct, via_view) == 0.0);
      if (acc.v.empty())
        acc = direct;
      else
        for (std::size_t j = 0; j < acc.v.size(); ++j) acc.v[j] += direct.v[j];
    }
    for (double& v : acc.v) v /= 3.0;
    CHECK(hml_test::max_rel_err(e.mean_forward(x), acc) < 1e-14);
  }

  Ensemble shared = Ensemble::init(EnsembleMode::shared_trunk_heads, 2, 5, 6, 4, 0.0, 77, true);
  Mat m0 = shared.member_forward(0, x);
  Mat m1 = shared.member_forward(1, x);
  CHECK(hml_test::max_rel_err(m0, m1) > 0.0);  // heads differ even with one trunk
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  Hierarchy h = small_tree();
  hml::Rng data_rng(400);
  Mat x = hml_test::random_probs(data_rng, 12, 4);
  Mat y = hml_test::random_labels(data_rng, 12, h);
  y(0, 0) = 1.0;

  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.ensemble_size = 2;
  cfg.hidden = 6;
  cfg.dropout_rate = 0.5;
  cfg.focal = FocalKind::bbma;
  cfg.scheduler = SchedulerKind::linear;
  cfg.seed = 123;

  TrainResult a = train(x, y, nullptr, nullptr, h, cfg);
  TrainResult b = train(x, y, nullptr, nullptr, h, cfg);
  REQUIRE(a.history.size() == 2);
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    CHECK(std::isfinite(a.history[e].train_loss));
    CHECK(a.history[e].train_loss == b.history[e].train_loss);
  }
  for (std::size_t i = 0; i < 2; ++i) {
    auto pa = a.ensemble.members[i].params();
    auto pb = b.ensemble.members[i].params();
    for (std::size_t k = 0; k < 6; ++k) CHECK(hml_test::max_rel_err(*pa[k], *pb[k]) == 0.0);
  }
}

TEST_CASE("training moves parameters and reports validation metrics") {
  Hierarchy h = small_tree();
  hml::Rng data_rng(500);
  Mat x = hml_test::random_probs(data_rng, 16, 4);
  Mat y = hml_test::random_labels(data_rng, 16, h);
  y(0, 0) = 1.0;
  Mat xv = hml_test::random_probs(data_rng, 6, 4);
  Mat yv = hml_test::random_labels(data_rng, 6, h);

  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.ensemble_size = 2;
  cfg.hidden = 6;
  cfg.dropout_rate = 0.0;
  cfg.seed = 9;

  TrainResult r = train(x, y, &xv, &yv, h, cfg);
  REQUIRE(r.history.size() == 3);
  for (const EpochRecord& rec : r.history) {
    CHECK(rec.has_val);
    CHECK(rec.val.macro.f1 >= 0.0);
    CHECK(rec.val.macro.f1 <= 1.0);
  }

  Ensemble fresh = Ensemble::init(cfg.mode, cfg.ensemble_size, 4, cfg.hidden, h.size(),
                                  cfg.dropout_rate, cfg.seed, cfg.trunk_frozen);
  double moved = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    auto pt = r.ensemble.members[i].params();
    auto pf = fresh.members[i].params();
    for (std::size_t k = 0; k < 6; ++k)
      for (std::size_t j = 0; j < pt[k]->v.size(); ++j)
        moved = std::max(moved, std::abs(pt[k]->v[j] - pf[k]->v[j]));
  }
  CHECK(moved > 0.0);
}

TEST_CASE("frozen shared trunk stays fixed while heads learn") {
  Hierarchy h = small_tree();
  hml::Rng data_rng(600);
  Mat x = hml_test::random_probs(data_rng, 12, 4);
  Mat y = hml_test::random_labels(data_rng, 12, h);
  y(0, 0) = 1.0;

  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.ensemble_size = 2;
  cfg.hidden = 6;
  cfg.dropout_rate = 0.0;
  cfg.mode = EnsembleMode::shared_trunk_heads;
  cfg.seed = 21;

  Ensemble fresh = Ensemble::init(cfg.mode, cfg.ensemble_size, 4, cfg.hidden, h.size(),
                                  cfg.dropout_rate, cfg.seed, true);

  SUBCASE("frozen") {
    cfg.trunk_frozen = true;
    TrainResult r = train(x, y, nullptr, nullptr, h, cfg);
    CHECK(hml_test::max_rel_err(r.ensemble.trunk.w1, fresh.trunk.w1) == 0.0);
    CHECK(hml_test::max_rel_err(r.ensemble.trunk.w2, fresh.trunk.w2) == 0.0);
    CHECK(hml_test::max_rel_err(r.ensemble.heads[0].w3, fresh.heads[0].w3) > 0.0);
  }
  SUBCASE("unfrozen") {
    cfg.trunk_frozen = false;
    TrainResult r = train(x, y, nullptr, nullptr, h, cfg);
    CHECK(hml_test::max_rel_err(r.ensemble.trunk.w1, fresh.trunk.w1) > 0.0);
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const std::string path = "ckpt_roundtrip_test.bin";

  SUBCASE("independent members") {
    Ensemble e = Ensemble::init(EnsembleMode::independent, 2, 3, 4, 5, 0.6, 42, true);
    save_checkpoint(e, path, 0x1234ABCDULL);
    LoadedCheckpoint lc = load_checkpoint(path);
    CHECK(lc.config_hash == 0x1234ABCDULL);
    CHECK(lc.ensemble.mode == EnsembleMode::independent);
    REQUIRE(lc.ensemble.size() == 2);
    CHECK(lc.ensemble.in_dim == 3);
    CHECK(lc.ensemble.hidden == 4);
    CHECK(lc.ensemble.out_dim == 5);
    CHECK(lc.ensemble.dropout_rate == 0.6);
    for (std::size_t i = 0; i < 2; ++i) {
      auto pa = e.members[i].params();
      auto pb = lc.ensemble.members[i].params();
      for (std::size_t k = 0; k < 6; ++k) CHECK(hml_test::max_rel_err(*pa[k], *pb[k]) == 0.0);
    }
  }
  SUBCASE("shared trunk") {
    Ensemble e = Ensemble::init(EnsembleMode::shared_trunk_heads, 3, 3, 4, 5, 0.0, 43, false);
    save_checkpoint(e, path, 7);
    LoadedCheckpoint lc = load_checkpoint(path);
    CHECK(lc.ensemble.mode == EnsembleMode::shared_trunk_heads);
    CHECK_FALSE(lc.ensemble.trunk_frozen);
    REQUIRE(lc.ensemble.size() == 3);
    CHECK(hml_test::max_rel_err(lc.ensemble.trunk.w1, e.trunk.w1) == 0.0);
    CHECK(hml_test::max_rel_err(lc.ensemble.trunk.b2, e.trunk.b2) == 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(hml_test::max_rel_err(lc.ensemble.heads[i].w3, e.heads[i].w3) == 0.0);
      CHECK(hml_test::max_rel_err(lc.ensemble.heads[i].b3, e.heads[i].b3) == 0.0);
    }
  }
  SUBCASE("wrong magic is rejected") {
    std::ofstream f(path, std::ios::binary);
    f << "NOTACKPTxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx";
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path), ParseError);
  }
  SUBCASE("truncated file is rejected") {
    Ensemble e = Ensemble::init(EnsembleMode::independent, 1, 3, 4, 5, 0.0, 44, true);
    save_checkpoint(e, path, 1);
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes(48);
    in.read(bytes.data(), 48);
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), 48);
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path), ParseError);
  }
  std::remove(path.c_str());
}

TEST_CASE("train rejects inconsistent shapes and empty settings") {
  Hierarchy h = small_tree();
  Mat x(4, 3);
  Mat y(4, h.size());
  y(0, 0) = 1.0;
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.ensemble_size = 1;
  cfg.hidden = 3;

  Mat bad_rows(3, 3);
  CHECK_THROWS_AS(train(bad_rows, y, nullptr, nullptr, h, cfg), ShapeError);
  Mat bad_cols(4, h.size() + 1);
  CHECK_THROWS_AS(train(x, bad_cols, nullptr, nullptr, h, cfg), ShapeError);
  TrainConfig zero = cfg;
  zero.epochs = 0;
  CHECK_THROWS_AS(train(x, y, nullptr, nullptr, h, zero), Error);
}
