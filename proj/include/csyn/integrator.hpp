#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "csyn/network.hpp"
#include "csyn/partition.hpp"

namespace csyn {

/// Uniformly sampled state history. Each sample is a dim x num_nodes matrix
/// (column per node, first row = membrane potential / first component).
struct Trajectory {
  double t0 = 0.0;
  double dt = 0.0;
  int num_nodes = 0;
  int dim = 0;
  std::vector<Matrix> samples;

  int size() const { return static_cast<int>(samples.size()); }
  double time_at(int i) const { return t0 + i * dt; }
  double t_end() const { return samples.empty() ? t0 : time_at(size() - 1); }
};

/// Initial history: state as a function of t for t <= t0.
using HistoryFn = std::function<Matrix(double)>;

HistoryFn constant_history(const Matrix& state);

/// Per-node forcing added to the first state component; returns one value per
/// node.
using ForcingFn = std::function<void(double, Vector&)>;

/// Runtime view of a network: models resolved, dynamical-synapse state slots
/// assigned, layers prepared for vectorized evaluation.
class NetworkSystem {
 public:
  NetworkSystem(const MultilayerNetwork& net, const ModelRegistry& registry);

  const MultilayerNetwork& network() const { return *net_; }
  int nodes() const { return num_nodes_; }
  int dim() const { return dim_; }            // n_base + synapse slots
  int base_dim() const { return base_dim_; }

  /// Active (non-padded) state components of a node: model dims + all slots.
  bool component_active(int node, int comp) const;
  int model_dim(int node) const;

  const NodeModel& model(int node) const { return *node_models_[node]; }
  const SynapseModel& synapse(int layer) const { return *layer_synapses_[layer]; }
  int synapse_state_index(int layer) const { return layer_state_index_[layer]; }

  /// dX = F(X, delayed states per layer) + forcing on the first row.
  void rhs(const Matrix& x, const std::vector<const Matrix*>& delayed,
           const Vector* forcing, Matrix& dx) const;

  /// Jacobian of the isolated-node part (model + synapse-state rows) at one
  /// node's state; dim() x dim(), padded components zero.
  void local_jacobian(int node, const Eigen::Ref<const Vector>& x,
                      Matrix& jac) const;

  /// Column = typical state of each node's model (synapse slots at their
  /// initial values); seeds initial histories.
  Matrix typical_state() const;

 private:
  const MultilayerNetwork* net_;
  int num_nodes_ = 0;
  int base_dim_ = 0;
  int dim_ = 0;
  std::vector<const NodeModel*> node_models_;
  std::vector<const SynapseModel*> layer_synapses_;
  std::vector<int> layer_state_index_;       // -1 for instantaneous kinds
  std::vector<const SynapseModel*> slot_synapses_;  // per slot, size dim_-base_dim_
  std::vector<Vector> layer_row_sums_;       // adjacency row sums, per layer
};

/// Fixed-step RK4 stepper for the delayed network equations. Delayed reads
/// land on grid points for whole-step stages and use cubic Hermite
/// interpolation for half-step stages; reads older than the stored horizon
/// are a hard error. Copyable: a copy continues independently.
class DdeStepper {
 public:
  DdeStepper(const NetworkSystem& sys, HistoryFn history, double t0, double dt,
             ForcingFn forcing = nullptr);

  void step();
  void advance(double duration);  // rounds to whole steps

  double time() const { return t0_ + steps_done_ * dt_; }
  double dt() const { return dt_; }
  const Matrix& state() const { return x_; }
  const NetworkSystem& system() const { return *sys_; }

  /// State at any t in [time() - horizon, time()]; grid reads are exact,
  /// off-grid reads use cubic Hermite on the enclosing step.
  Matrix delayed(double t) const;

  /// Snapped per-layer delays actually in use (multiples of dt).
  const std::vector<double>& layer_delays() const { return delays_; }
  double max_delay() const { return max_delay_; }

  /// Observer invoked once per RK stage with the stage time, stage state and
  /// the delayed states per layer (zero-delay layers point at the stage
  /// state). Drives co-integrated systems.
  using StageObserver =
      std::function<void(int, double, const Matrix&, const std::vector<const Matrix*>&)>;
  void step(const StageObserver& observer);

 private:
  Matrix read(double t) const;

  const NetworkSystem* sys_;
  HistoryFn history_;
  ForcingFn forcing_;
  double t0_ = 0.0;
  double dt_ = 0.0;
  long steps_done_ = 0;
  std::vector<double> delays_;
  double max_delay_ = 0.0;

  Matrix x_;
  // ring buffer of (state, right-derivative) at grid times
  int ring_cap_ = 0;
  long ring_newest_ = -1;  // step index of newest stored entry
  std::vector<Matrix> ring_x_, ring_f_;
  Matrix k1_, k2_, k3_, k4_, xs_;

  friend class BlockVariationalStepper;
};

/// Snaps every positive layer delay to the nearest multiple of dt. A positive
/// delay that rounds to zero is an error (delay smaller than the step).
std::vector<double> snap_delays(const MultilayerNetwork& net, double dt);

struct IntegrateOptions {
  double t_end = 0.0;
  double dt = 0.0;
  ForcingFn forcing = nullptr;
  int record_stride = 1;
  double divergence_bound = 1e9;  // abort when any |state| exceeds this
};

Trajectory integrate_dde(const NetworkSystem& sys, HistoryFn history,
                         const IntegrateOptions& opts);

/// Expands a quotient trajectory to all members of each cluster.
Trajectory lift_trajectory(const Trajectory& qtraj, const Clustering& clustering);

struct PulseSpec {
  int target_node = 0;  // 0-based
  double amplitude = 1.0;
  double t_on = 0.0;
  double duration = 1.0;
};

struct DecayFit {
  int node = 0;
  double tau = 0.0;         // exponential decay constant after pulse offset
  double r2 = 0.0;          // regression quality on log|deviation|
  double peak_dev = 0.0;
  bool valid = false;
};

struct PulseResponse {
  Trajectory traj;
  Matrix baseline;             // equilibrium state before the pulse
  std::vector<DecayFit> fits;  // per node
};

struct PulseOptions {
  double dt = 0.01;
  double settle_time = 500.0;   // pre-pulse equilibration
  double horizon = 500.0;       // recorded window from pulse onset
  double fit_floor_rel = 1e-4;  // stop fit when |dev| < rel * peak
};

PulseResponse pulse_response(const NetworkSystem& sys, const PulseSpec& pulse,
                             const PulseOptions& opts);

struct SyncErrorReport {
  std::vector<double> times;
  // per nontrivial cluster: max pairwise |V_i - V_j| at each sample
  std::vector<std::vector<double>> cluster_error;
  std::vector<std::vector<int>> clusters;  // the nontrivial clusters measured
  Matrix correlation;                      // node-pair Pearson corr of V over the window
};

SyncErrorReport sync_error(const Trajectory& traj, const Clustering& clustering,
                           double window_start = 0.0);

}  // namespace csyn
