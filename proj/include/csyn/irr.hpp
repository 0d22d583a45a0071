#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "csyn/network.hpp"
#include "csyn/partition.hpp"

namespace csyn {

struct TransverseBlock {
  std::vector<int> rows;      // row indices of T, each in [Q, N)
  std::set<int> clusters;     // clusters supporting those rows
};

/// Orthogonal change of perturbation coordinates separating the synchronous
/// subspace (rows 0..Q-1, normalized cluster indicators) from transverse
/// motion, with the transverse parts of all B^k = T A^k T^T simultaneously
/// block-diagonal.
struct IrrTransform {
  Matrix T;
  std::vector<Matrix> B;             // per layer
  int sync_dim = 0;                  // Q
  std::vector<int> row_support;      // size N-Q: cluster carrying transverse row Q+m
  std::vector<TransverseBlock> blocks;
  double orth_residual = 0.0;        // ||T T^T - I||_max
  double block_residual = 0.0;       // max off-block magnitude over all B^k
  double lower_left_residual = 0.0;  // ||B^k[Q:, :Q]||_max
  bool admissible = false;

  int cluster_of_row(int row) const { return row_support[row - sync_dim]; }
};

struct AdmissibilityEdge {
  int layer = 0;
  int i = 0;
  int j = 0;
};

struct AdmissibilityReport {
  bool ok = false;
  bool undirected = false;
  std::vector<AdmissibilityEdge> offending;  // asymmetric links between nontrivial clusters
};

/// The construction supports undirected networks and directed networks whose
/// asymmetric links touch only trivial (singleton) clusters.
AdmissibilityReport check_directed_admissible(const MultilayerNetwork& net,
                                              const Clustering& clustering);

struct IrrOptions {
  double eps_block = -1.0;   // < 0: 1e-8 scaled by max weight magnitude
  std::uint64_t seed = 0;    // seeds the commutant sampling
  bool require_admissible = true;
  int max_rounds = 16;
};

IrrTransform build_transform(const MultilayerNetwork& net,
                             const Clustering& clustering,
                             const IrrOptions& opts = {});

/// cluster -> indices of blocks containing a row supported on it.
std::map<int, std::set<int>> block_cluster_map(const IrrTransform& irr);

/// Partition of the nontrivial clusters into intertwined groups (transitive
/// closure of "shares a transverse block").
std::vector<std::vector<int>> intertwined_groups(const IrrTransform& irr,
                                                 const Clustering& clustering);

}  // namespace csyn
