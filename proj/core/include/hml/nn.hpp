#ifndef HML_NN_HPP
#define HML_NN_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hml/autodiff.hpp"
#include "hml/hierarchy.hpp"
#include "hml/imbalance.hpp"
#include "hml/mat.hpp"
#include "hml/metrics.hpp"
#include "hml/rng.hpp"
#include "hml/uncertainty.hpp"

namespace hml {

/// Inverted-scaling dropout mask: entries are 1/(1-rate) with probability
/// 1-rate, else 0.
Mat dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng);

/// Three affine layers (in -> hidden -> hidden -> out), ReLU plus dropout
/// after the first two, sigmoid on the output. All tensors are doubles.
struct Mlp {
  std::size_t in_dim = 0, hidden = 0, out_dim = 0;
  double dropout_rate = 0.7;
  Mat w1, b1, w2, b2, w3, b3;

  static Mlp init(std::size_t in, std::size_t hid, std::size_t out, double drop, Rng& rng);

  /// Plain forward pass. rng is only touched when dropout_on and the rate is
  /// positive; with dropout off the pass is deterministic.
  Mat forward(const Mat& x, bool dropout_on = false, Rng* rng = nullptr) const;

  std::array<Mat*, 6> params() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
  std::array<const Mat*, 6> params() const { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
};

/// Forward pass recorded on a tape. Draws dropout masks in the same order as
/// Mlp::forward, so both paths produce identical values for the same rng state.
struct TapeMlp {
  Tape::NodeId out = -1;
  std::array<Tape::NodeId, 6> param_ids{};
};
TapeMlp tape_forward(Tape& tape, const Mlp& m, Tape::NodeId x, bool dropout_on, Rng* rng);

/// MC-dropout uncertainty source: `passes` stochastic forwards with dropout
/// active, collected like ensemble members.
EnsembleOutput mc_dropout_probs(const Mlp& model, const Mat& x, std::size_t passes, Rng& rng);

struct Adam {
  double lr = 1e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  struct Slot {
    Mat m, v;
  };
  std::vector<Slot> slots;
  std::size_t t = 0;

  /// First call sizes the moment slots from the parameter shapes.
  void step(const std::vector<Mat*>& params, const std::vector<const Mat*>& grads);
};

enum class EnsembleMode { independent, shared_trunk_heads };

struct TrunkParams {
  Mat w1, b1, w2, b2;
};
struct HeadParams {
  Mat w3, b3;
};

/// Either M full models or one trunk with M output heads. With the trunk
/// frozen, only the heads learn.
struct Ensemble {
  EnsembleMode mode = EnsembleMode::independent;
  bool trunk_frozen = true;
  std::size_t in_dim = 0, hidden = 0, out_dim = 0;
  double dropout_rate = 0.7;
  std::vector<Mlp> members;       // independent mode
  TrunkParams trunk;              // shared mode
  std::vector<HeadParams> heads;  // shared mode

  static Ensemble init(EnsembleMode mode, std::size_t m_count, std::size_t in, std::size_t hid,
                       std::size_t out, double drop, std::uint64_t seed, bool trunk_frozen);

  std::size_t size() const {
    return mode == EnsembleMode::independent ? members.size() : heads.size();
  }

  /// Member i as a standalone model (shared mode stitches trunk + head).
  Mlp member_view(std::size_t i) const;

  Mat member_forward(std::size_t i, const Mat& x, bool dropout_on = false,
                     Rng* rng = nullptr) const;

  /// Average of all member outputs, dropout off.
  Mat mean_forward(const Mat& x) const;
};

enum class FocalKind { none, bbma, gmu, ep_kl, ep_js };
enum class UncertaintySource { ensemble, dropout };

struct TrainConfig {
  double lr = 1e-4;
  std::size_t epochs = 20;
  std::size_t batch_size = 4;
  bool imbalance_on = true;
  double w0 = 0.25;
  NClassesMode n_classes_mode = NClassesMode::node_count;
  FocalKind focal = FocalKind::none;
  double u0 = 0.25;
  double focal_k = 1.0;
  UncertaintySource uncertainty_source = UncertaintySource::ensemble;
  std::size_t dropout_passes = 0;  // 0 means: use ensemble_size passes
  bool uncertainty_post_constraint = false;
  SchedulerKind scheduler = SchedulerKind::none;
  double scheduler_k = 3.0;
  double lambda = 0.5;
  std::size_t ensemble_size = 10;
  EnsembleMode mode = EnsembleMode::independent;
  bool trunk_frozen = true;
  std::size_t hidden = 64;
  double dropout_rate = 0.7;
  std::uint64_t seed = 0;
  double threshold = 0.5;
};

struct EpochRecord {
  double train_loss = 0.0;  // mean per-member loss over the epoch's batches
  bool has_val = false;
  MetricsReport val;
};

struct TrainResult {
  Ensemble ensemble;
  std::vector<EpochRecord> history;
};

/// Full training loop. Labels must be ancestor-closed; imbalance weights are
/// computed from Y as given (resample before calling when oversampling is
/// wanted). Per batch, every member minimizes its own weighted loss; focal
/// weights come from the detached member outputs or MC-dropout passes.
/// Validation metrics threshold f_cm of the ensemble mean. Throws
/// TrainDiverged on a non-finite loss.
TrainResult train(const Mat& x, const Mat& y, const Mat* x_val, const Mat* y_val,
                  const Hierarchy& h, const TrainConfig& cfg);

/// Versioned little-endian parameter dump; round-trips exactly.
void save_checkpoint(const Ensemble& e, const std::string& path, std::uint64_t config_hash);

struct LoadedCheckpoint {
  Ensemble ensemble;
  std::uint64_t config_hash = 0;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace hml

#endif  // HML_NN_HPP
