#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gaggle/common.hpp"
#include "gaggle/encoding.hpp"
#include "gaggle/layers.hpp"
#include "gaggle/losses.hpp"
#include "gaggle/optim.hpp"
#include "gaggle/replay.hpp"
#include "gaggle/rng.hpp"

namespace gaggle {

inline constexpr int kNumActions = 4;

enum class ModelKind { VanillaDQN, DoubleDQN, DuelingDQN };

inline EncoderVariant default_encoder(ModelKind kind) {
  return kind == ModelKind::VanillaDQN ? EncoderVariant::Slim3 : EncoderVariant::Full17;
}

inline const char* model_name(ModelKind k) {
  switch (k) {
    case ModelKind::VanillaDQN: return "vanilla_dqn";
    case ModelKind::DoubleDQN: return "double_dqn";
    case ModelKind::DuelingDQN: return "dueling_dqn";
  }
  return "?";
}

// Q = V + (A - mean_a A), broadcast per row; the mean subtraction pins the
// advantage stream's expectation to zero so the decomposition identifies.
inline Tensor dueling_aggregate(const Tensor& v, const Tensor& a) {
  expects(v.ndim() == 2 && v.dim(1) == 1, "dueling_aggregate: value must be (B,1)");
  expects(a.ndim() == 2 && a.dim(1) == kNumActions, "dueling_aggregate: advantage must be (B,4)");
  expects(v.dim(0) == a.dim(0), "dueling_aggregate: batch mismatch");
  const int B = v.dim(0);
  Tensor q({B, kNumActions});
  for (int b = 0; b < B; ++b) {
    const double* ar = a.data.data() + static_cast<size_t>(b) * kNumActions;
    double mean = (ar[0] + ar[1] + ar[2] + ar[3]) / kNumActions;
    for (int j = 0; j < kNumActions; ++j)
      q.data[static_cast<size_t>(b) * kNumActions + j] = v.data[b] + ar[j] - mean;
  }
  return q;
}

// Gradients of the aggregation: dV = row-sum(dQ), dA = dQ - row-mean(dQ).
inline void dueling_aggregate_backward(const Tensor& dq, Tensor& dv, Tensor& da) {
  const int B = dq.dim(0);
  dv = Tensor({B, 1});
  da = Tensor({B, kNumActions});
  for (int b = 0; b < B; ++b) {
    const double* dr = dq.data.data() + static_cast<size_t>(b) * kNumActions;
    double sum = dr[0] + dr[1] + dr[2] + dr[3];
    dv.data[b] = sum;
    for (int j = 0; j < kNumActions; ++j)
      da.data[static_cast<size_t>(b) * kNumActions + j] = dr[j] - sum / kNumActions;
  }
}

// One Q-value network. Vanilla/double variants are a single trunk ending in
// the 4-way head; the dueling variant splits the shared trunk output into a
// value stream (B,1) and an advantage stream (B,4), recombined by
// dueling_aggregate.
class QNetwork {
 public:
  QNetwork() = default;

  QNetwork(ModelKind kind, std::vector<LayerSpec> trunk, std::vector<LayerSpec> value,
           std::vector<LayerSpec> advantage, uint64_t seed)
      : kind_(kind),
        trunk_spec_(std::move(trunk)),
        value_spec_(std::move(value)),
        adv_spec_(std::move(advantage)) {
    SplitMix64 rng(seed);
    for (const auto& s : trunk_spec_) trunk_.push_back(make_layer(s, rng));
    for (const auto& s : value_spec_) value_.push_back(make_layer(s, rng));
    for (const auto& s : adv_spec_) adv_.push_back(make_layer(s, rng));
  }

  QNetwork(const QNetwork& o) { *this = o; }
  QNetwork& operator=(const QNetwork& o) {
    if (this == &o) return *this;
    SplitMix64 rng(0);
    kind_ = o.kind_;
    trunk_spec_ = o.trunk_spec_;
    value_spec_ = o.value_spec_;
    adv_spec_ = o.adv_spec_;
    trunk_.clear();
    value_.clear();
    adv_.clear();
    for (const auto& s : trunk_spec_) trunk_.push_back(make_layer(s, rng));
    for (const auto& s : value_spec_) value_.push_back(make_layer(s, rng));
    for (const auto& s : adv_spec_) adv_.push_back(make_layer(s, rng));
    copy_values_from(o);
    return *this;
  }
  QNetwork(QNetwork&&) = default;
  QNetwork& operator=(QNetwork&&) = default;

  ModelKind kind() const { return kind_; }
  bool dueling() const { return !value_.empty(); }
  const std::vector<LayerSpec>& trunk_spec() const { return trunk_spec_; }
  const std::vector<LayerSpec>& value_spec() const { return value_spec_; }
  const std::vector<LayerSpec>& advantage_spec() const { return adv_spec_; }

  // Q-values (B, 4). training toggles batch-norm batch statistics; acting and
  // target computation run in inference mode.
  Tensor forward(const Tensor& x, bool training = false) {
    Tensor h = x;
    for (auto& l : trunk_) h = l->forward(h, training);
    if (!dueling()) return h;
    Tensor v = h, a = h;
    for (auto& l : value_) v = l->forward(v, training);
    for (auto& l : adv_) a = l->forward(a, training);
    return dueling_aggregate(v, a);
  }

  // Backprop dL/dQ through the network; accumulates param grads, returns dx.
  Tensor backward(const Tensor& dq) {
    Tensor dh;
    if (dueling()) {
      Tensor dv, da;
      dueling_aggregate_backward(dq, dv, da);
      for (auto it = value_.rbegin(); it != value_.rend(); ++it) dv = (*it)->backward(dv);
      for (auto it = adv_.rbegin(); it != adv_.rend(); ++it) da = (*it)->backward(da);
      dh = dv;
      for (size_t i = 0; i < dh.data.size(); ++i) dh.data[i] += da.data[i];
    } else {
      dh = dq;
    }
    for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) dh = (*it)->backward(dh);
    return dh;
  }

  std::vector<Tensor*> params() {
    std::vector<Tensor*> out;
    for (auto& l : trunk_)
      for (Tensor* p : l->params()) out.push_back(p);
    for (auto& l : value_)
      for (Tensor* p : l->params()) out.push_back(p);
    for (auto& l : adv_)
      for (Tensor* p : l->params()) out.push_back(p);
    return out;
  }

  // Non-learned per-layer state (batch-norm running stats).
  std::vector<Tensor*> state_buffers() {
    std::vector<Tensor*> out;
    for (auto& l : trunk_)
      for (Tensor* p : l->state_buffers()) out.push_back(p);
    for (auto& l : value_)
      for (Tensor* p : l->state_buffers()) out.push_back(p);
    for (auto& l : adv_)
      for (Tensor* p : l->state_buffers()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (Tensor* p : params()) p->zero_grad();
  }

  // Copies parameters and running stats; architectures must match.
  void copy_values_from(const QNetwork& o) {
    QNetwork& other = const_cast<QNetwork&>(o);
    auto dst_p = params(), src_p = other.params();
    expects(dst_p.size() == src_p.size(), "QNetwork::copy_values_from: param count mismatch");
    for (size_t i = 0; i < dst_p.size(); ++i) {
      expects(dst_p[i]->shape == src_p[i]->shape, "QNetwork::copy_values_from: shape mismatch");
      dst_p[i]->data = src_p[i]->data;
      dst_p[i]->version += 1;
    }
    auto dst_s = state_buffers(), src_s = other.state_buffers();
    expects(dst_s.size() == src_s.size(), "QNetwork::copy_values_from: state count mismatch");
    for (size_t i = 0; i < dst_s.size(); ++i) {
      dst_s[i]->data = src_s[i]->data;
      dst_s[i]->version += 1;
    }
  }

 private:
  ModelKind kind_ = ModelKind::VanillaDQN;
  std::vector<LayerSpec> trunk_spec_, value_spec_, adv_spec_;
  std::vector<std::unique_ptr<Layer>> trunk_, value_, adv_;
};

// Network construction per model kind.
//
//   vanilla: conv 3->32 3x3 toroidal, conv 32->64 3x3 toroidal, flatten 4928,
//            fc 4928->128, fc 128->4, leaky ReLU between trainable layers.
//   double:  conv 17->128 (3,5), 128->256 (3,3), 256->128 (3,3), all valid,
//            each followed by batch norm + leaky ReLU; flatten 384;
//            fc 384->64 + leaky ReLU; fc 64->4.
//   dueling: the same trunk; value stream fc 384->128 + leaky ReLU + 128->1,
//            advantage stream fc 384->128 + leaky ReLU + 128->4, aggregated.
// in_channels defaults to the model's paired encoder (3 for vanilla, 17
// otherwise) and only needs passing when the encoder pairing is overridden.
inline QNetwork build(ModelKind kind, uint64_t seed, double leaky_slope = 0.01,
                      int in_channels = -1) {
  using K = LayerSpec;
  if (in_channels <= 0) in_channels = encoder_channels(default_encoder(kind));
  std::vector<LayerSpec> trunk, value, adv;
  switch (kind) {
    case ModelKind::VanillaDQN:
      trunk = {
          K::conv2d(in_channels, 32, 3, 3, PadMode::Toroidal),
          K::leaky_relu(leaky_slope),
          K::conv2d(32, 64, 3, 3, PadMode::Toroidal),
          K::leaky_relu(leaky_slope),
          K::flatten(),
          K::linear(64 * kCells, 128),
          K::leaky_relu(leaky_slope),
          K::linear(128, kNumActions),
      };
      break;
    case ModelKind::DoubleDQN:
    case ModelKind::DuelingDQN:
      trunk = {
          K::conv2d(in_channels, 128, 3, 5, PadMode::Valid),
          K::batchnorm2d(128),
          K::leaky_relu(leaky_slope),
          K::conv2d(128, 256, 3, 3, PadMode::Valid),
          K::batchnorm2d(256),
          K::leaky_relu(leaky_slope),
          K::conv2d(256, 128, 3, 3, PadMode::Valid),
          K::batchnorm2d(128),
          K::leaky_relu(leaky_slope),
          K::flatten(),
      };
      if (kind == ModelKind::DoubleDQN) {
        trunk.push_back(K::linear(384, 64));
        trunk.push_back(K::leaky_relu(leaky_slope));
        trunk.push_back(K::linear(64, kNumActions));
      } else {
        value = {K::linear(384, 128), K::leaky_relu(leaky_slope), K::linear(128, 1)};
        adv = {K::linear(384, 128), K::leaky_relu(leaky_slope), K::linear(128, kNumActions)};
      }
      break;
  }
  return QNetwork(kind, std::move(trunk), std::move(value), std::move(adv), seed);
}

// Online network plus its periodically synchronized frozen copy.
struct TargetPair {
  QNetwork online;
  QNetwork target;
  int sync_period = 100;
  int steps_since_sync = 0;

  static TargetPair make(ModelKind kind, uint64_t seed, int sync_period = 100,
                         double leaky_slope = 0.01, int in_channels = -1) {
    TargetPair p;
    p.online = build(kind, seed, leaky_slope, in_channels);
    p.target = build(kind, seed, leaky_slope, in_channels);
    p.target.copy_values_from(p.online);
    p.sync_period = sync_period;
    return p;
  }

  void sync() {
    target.copy_values_from(online);
    steps_since_sync = 0;
  }
};

// ---- training batches ------------------------------------------------------

struct Batch {
  Tensor s;       // (B, C, 7, 11)
  Tensor s_next;  // (B, C, 7, 11)
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<uint8_t> terminal;

  int size() const { return static_cast<int>(actions.size()); }
};

inline Batch make_batch(const std::vector<const Transition*>& ts) {
  expects(!ts.empty(), "make_batch: empty batch");
  Batch b;
  std::vector<const StateTensor*> s, sn;
  for (const Transition* t : ts) {
    s.push_back(&t->s);
    sn.push_back(&t->s_next);
    b.actions.push_back(t->action);
    b.rewards.push_back(t->reward);
    b.terminal.push_back(t->terminal ? 1 : 0);
  }
  b.s = stack_states(s);
  b.s_next = stack_states(sn);
  return b;
}

// ---- TD targets -------------------------------------------------------------

// r + gamma * max_a' q_next[a'], or r alone on terminal transitions.
inline std::vector<double> vanilla_target_from_q(const Tensor& q_next,
                                                 const std::vector<double>& rewards,
                                                 const std::vector<uint8_t>& terminal,
                                                 double gamma) {
  const int B = q_next.dim(0);
  std::vector<double> out(static_cast<size_t>(B));
  for (int b = 0; b < B; ++b) {
    double t = rewards[static_cast<size_t>(b)];
    if (!terminal[static_cast<size_t>(b)]) {
      const double* q = q_next.data.data() + static_cast<size_t>(b) * kNumActions;
      double best = q[0];
      for (int j = 1; j < kNumActions; ++j) best = std::max(best, q[j]);
      t += gamma * best;
    }
    out[static_cast<size_t>(b)] = t;
  }
  return out;
}

// Selection by argmax of q_select, evaluation by q_eval (both on s').
inline std::vector<double> double_target_from_q(const Tensor& q_select, const Tensor& q_eval,
                                                const std::vector<double>& rewards,
                                                const std::vector<uint8_t>& terminal,
                                                double gamma) {
  const int B = q_select.dim(0);
  std::vector<double> out(static_cast<size_t>(B));
  for (int b = 0; b < B; ++b) {
    double t = rewards[static_cast<size_t>(b)];
    if (!terminal[static_cast<size_t>(b)]) {
      const double* qs = q_select.data.data() + static_cast<size_t>(b) * kNumActions;
      int best = 0;
      for (int j = 1; j < kNumActions; ++j)
        if (qs[j] > qs[best]) best = j;
      t += gamma * q_eval.data[static_cast<size_t>(b) * kNumActions + best];
    }
    out[static_cast<size_t>(b)] = t;
  }
  return out;
}

inline std::vector<double> td_target_vanilla(const Batch& batch, QNetwork& online, double gamma) {
  expects(gamma >= 0.0 && gamma <= 1.0, "td_target_vanilla: gamma out of range");
  Tensor q_next = online.forward(batch.s_next, /*training=*/false);
  return vanilla_target_from_q(q_next, batch.rewards, batch.terminal, gamma);
}

// Double-Q target: the online network picks the action on s', the frozen
// target network scores it. select_on_next=false reproduces the printed
// equation variant that selects on the current state instead.
inline std::vector<double> td_target_double(const Batch& batch, TargetPair& pair, double gamma,
                                            bool select_on_next = true) {
  expects(gamma >= 0.0 && gamma <= 1.0, "td_target_double: gamma out of range");
  Tensor q_select = pair.online.forward(select_on_next ? batch.s_next : batch.s, false);
  Tensor q_eval = pair.target.forward(batch.s_next, false);
  return double_target_from_q(q_select, q_eval, batch.rewards, batch.terminal, gamma);
}

struct TrainStepResult {
  double loss = 0.0;
  double mean_abs_td = 0.0;
};

// One gradient step on the online network. Targets are constants (no
// gradient flows into the target network), the loss sees only the Q-values
// of the taken actions, and the target follows the model kind: pure
// single-network bootstrapping for the vanilla DQN, double-Q for the rest.
// Syncs target <- online every sync_period calls.
inline TrainStepResult train_step(TargetPair& pair, const Batch& batch, LossKind loss_kind,
                                  OptimState& optim, double gamma, double huber_delta = 1.0,
                                  bool double_select_on_next = true) {
  expects(batch.size() > 0, "train_step: empty batch");
  const int B = batch.size();

  std::vector<double> target =
      pair.online.kind() == ModelKind::VanillaDQN
          ? td_target_vanilla(batch, pair.online, gamma)
          : td_target_double(batch, pair, gamma, double_select_on_next);

  Tensor q = pair.online.forward(batch.s, /*training=*/true);
  Tensor pred({B});
  Tensor tgt({B});
  for (int b = 0; b < B; ++b) {
    pred.data[static_cast<size_t>(b)] =
        q.data[static_cast<size_t>(b) * kNumActions + batch.actions[static_cast<size_t>(b)]];
    tgt.data[static_cast<size_t>(b)] = target[static_cast<size_t>(b)];
  }

  Tensor dpred;
  TrainStepResult res;
  res.loss = loss_kind == LossKind::MSE ? mse_loss(pred, tgt, &dpred)
                                        : huber_loss(pred, tgt, huber_delta, &dpred);
  for (int b = 0; b < B; ++b)
    res.mean_abs_td += std::abs(pred.data[static_cast<size_t>(b)] - tgt.data[static_cast<size_t>(b)]);
  res.mean_abs_td /= B;

  Tensor dq({B, kNumActions});
  for (int b = 0; b < B; ++b)
    dq.data[static_cast<size_t>(b) * kNumActions + batch.actions[static_cast<size_t>(b)]] =
        dpred.data[static_cast<size_t>(b)];

  pair.online.zero_grad();
  pair.online.backward(dq);
  adam_step(pair.online.params(), optim);

  pair.steps_since_sync += 1;
  if (pair.steps_since_sync >= pair.sync_period) pair.sync();
  return res;
}

}  // namespace gaggle
