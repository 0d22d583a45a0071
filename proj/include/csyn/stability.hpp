#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csyn/integrator.hpp"
#include "csyn/irr.hpp"
#include "csyn/quotient.hpp"

namespace csyn {

/// Linearization of the network equations about the cluster-synchronous
/// trajectory, restricted to one transverse block. Each block coordinate is
/// an n-dimensional perturbation vector tied to one cluster; the self part
/// couples through the synchronous-state Jacobian plus the summed
/// post-synaptic derivatives, the delayed part through the block's B^k
/// entries and the pre-synaptic derivatives.
struct VariationalSystem {
  const QuotientNetwork* quotient = nullptr;
  const IrrTransform* irr = nullptr;
  int block_index = 0;
  std::vector<int> rows;          // transverse row indices of T
  std::vector<int> row_cluster;   // cluster per coordinate
  std::vector<Matrix> block_b;    // per layer: block-restricted B^k
};

VariationalSystem build_variational(const QuotientNetwork& q,
                                    const IrrTransform& irr, int block_index);

/// Post-transient cluster-synchronous trajectory source: a quotient stepper
/// parked on the attractor, copied by each consumer.
struct SyncSource {
  std::shared_ptr<NetworkSystem> sys;
  std::shared_ptr<DdeStepper> stepper;
};

/// Integrates the quotient through `transient` time units from a mildly
/// jittered typical state (seeded), leaving the stepper on the limit set.
SyncSource prepare_sync(const QuotientNetwork& q, const ModelRegistry& registry,
                        double dt, double transient, std::uint64_t seed,
                        double divergence_bound = 1e9);

struct MleOptions {
  double dt = 0.01;
  double horizon = 2000.0;         // averaging window (time units)
  double renorm_interval = 1.0;
  double align = 100.0;            // discarded leading window (Benettin alignment)
  std::uint64_t seed = 1;
  double divergence_bound = 1e9;
};

struct BlockMle {
  int block = 0;
  double lambda = 0.0;
  double stderr_ = 0.0;
  int windows = 0;
  bool ok = false;
  std::string message;
};

/// Benettin estimate of the block's maximum Lyapunov exponent along the
/// synchronous trajectory: co-integrates the quotient and the block
/// variational system, renormalizing the perturbation and its stored history
/// by the same factor at every interval.
BlockMle block_mle(const VariationalSystem& vs, const SyncSource& sync,
                   const MleOptions& opts);

struct ClusterVerdict {
  int cluster = 0;
  double lambda = 0.0;
  bool stable = false;
  std::vector<int> blocks;  // associated block indices
};

/// Per-cluster MLE = max over the cluster's transverse blocks; stable iff
/// negative. Covers nontrivial clusters only.
std::vector<ClusterVerdict> cluster_stability(
    const IrrTransform& irr, const Clustering& clustering,
    const std::map<int, double>& block_lambda);

struct SweepParameter {
  enum class Kind { Delay, Sigma } kind = Kind::Delay;
  int layer = 0;
};

struct StabilityPoint {
  double value = 0.0;
  std::vector<BlockMle> block_results;
  std::vector<ClusterVerdict> verdicts;
  bool ok = false;
  std::string message;
};

struct EdgeCrossing {
  int cluster = 0;
  double value = 0.0;  // linear interpolation between adjacent grid points
  bool to_unstable = false;
};

struct StabilityReport {
  std::string parameter;
  std::vector<StabilityPoint> points;
  std::vector<EdgeCrossing> crossings;
  std::vector<std::vector<int>> intertwined;
  // metadata
  double dt = 0.0, transient = 0.0, horizon = 0.0, renorm_interval = 0.0;
  std::uint64_t seed = 0;
};

struct SweepOptions {
  double dt = 0.01;
  double transient = 500.0;
  MleOptions mle;
  int jobs = 0;  // 0: hardware concurrency
};

/// Recomputes trajectory + all block MLEs + cluster verdicts at each
/// parameter value; failures are recorded per point and the sweep continues.
StabilityReport parameter_sweep(const MultilayerNetwork& net,
                                const Clustering& clustering,
                                const IrrTransform& irr,
                                const ModelRegistry& registry,
                                const SweepParameter& param,
                                const std::vector<double>& values,
                                const SweepOptions& opts);

enum class SyncOutcome { Decayed, Grew, Inconclusive };

struct ClusterConcordance {
  int cluster = 0;
  double lambda = 0.0;
  bool predicted_stable = false;
  SyncOutcome observed = SyncOutcome::Inconclusive;
  bool concordant = false;
  bool flagged = false;  // |lambda| below the noise floor or inconclusive
};

struct ConcordanceReport {
  std::vector<ClusterConcordance> clusters;
  std::vector<std::vector<int>> empirical_clusters;  // grouping after breaking
  std::vector<std::vector<int>> predicted_clusters;  // block-predicted refinement
  bool refinement_match = false;
  double branch_symmetry = 0.0;  // |mean of split branches - synchronous orbit|
  Trajectory traj;
};

struct VerifyOptions {
  double dt = 0.01;
  double transient = 500.0;
  double horizon = 1500.0;
  double perturbation = 1e-6;
  double decay_factor = 1e-2;    // stable when error falls below perturbation * factor
  double growth_scale = 0.05;    // grew when error exceeds scale * attractor size
  double group_tol = 1e-3;       // empirical clustering threshold (scaled)
  double flag_floor = 1e-3;      // |lambda| below this is flagged, not scored
  std::uint64_t seed = 1;
  std::optional<int> perturb_block;  // restrict the perturbation to one block
};

/// Direct-simulation cross-check of the per-cluster verdicts. Integrates the
/// full network from the synchronous history plus a small transverse
/// perturbation; on breaking, reports the empirical refined clustering.
ConcordanceReport verify_by_simulation(const MultilayerNetwork& net,
                                       const Clustering& clustering,
                                       const IrrTransform& irr,
                                       const ModelRegistry& registry,
                                       const std::map<int, double>& block_lambda,
                                       const VerifyOptions& opts);

/// Direct numerical restatement of equitability at the Jacobian level: max
/// deviation of the self-coupling term across members of each cluster,
/// sampled along a synchronous trajectory.
double rho1_residual(const MultilayerNetwork& net, const Clustering& clustering,
                     const ModelRegistry& registry, const Trajectory& sync_traj,
                     int samples = 16);

}  // namespace csyn
