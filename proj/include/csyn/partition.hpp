#pragma once

#include <optional>
#include <vector>

#include "csyn/network.hpp"

namespace csyn {

/// An ordered partition of the node set. Canonical form: clusters sorted by
/// their smallest member, members ascending. All indices 0-based.
struct Clustering {
  std::vector<int> assignment;             // node -> cluster index
  std::vector<std::vector<int>> clusters;  // canonical order

  int count() const { return static_cast<int>(clusters.size()); }
  int num_nodes() const { return static_cast<int>(assignment.size()); }
};

/// Builds the canonical Clustering from a raw node->group labeling.
Clustering clustering_from_assignment(const std::vector<int>& labels);

struct EquitabilityWitness {
  int layer = 0;      // k
  int cluster_p = 0;  // cluster holding the two nodes
  int cluster_q = 0;  // source cluster with mismatched in-sums
  int node_i = 0;
  int node_i2 = 0;
  double sum_i = 0.0;
  double sum_i2 = 0.0;
};

struct EquitabilityResult {
  bool equitable = false;
  std::optional<EquitabilityWitness> witness;
};

/// Absolute signature tolerance for a network: eps_sig relative to the
/// largest weight magnitude. Whole-multiset sums are computed in sorted
/// order, so equal in-weight multisets compare bitwise equal and quantized
/// networks are effectively exact.
double signature_tolerance(const MultilayerNetwork& net, double eps_rel = 1e-9);

/// True iff every pair of nodes in the same cluster receives the same summed
/// weight from every cluster, on every layer, and clusters are homogeneous in
/// node type. On failure returns the first witness found.
EquitabilityResult is_equitable(const MultilayerNetwork& net,
                                const Clustering& clustering,
                                double eps_abs = -1.0);

/// Coarsest equitable partition refining the node-type partition, computed by
/// iterative signature refinement. Deterministic; terminates in at most N
/// rounds.
Clustering coarsest_equitable_partition(const MultilayerNetwork& net,
                                        double eps_abs = -1.0);

/// Clusters with at least two members, in canonical order.
std::vector<std::vector<int>> nontrivial_clusters(const Clustering& clustering);

}  // namespace csyn
