#pragma once

#include "csyn/integrator.hpp"
#include "csyn/network.hpp"
#include "csyn/partition.hpp"

namespace csyn {

/// The reduced Q-node network whose trajectories are the cluster-synchronous
/// solutions of the full system. Layer q<-p weight: summed in-weight from
/// C_p into any representative of C_q (validated across all members).
struct QuotientNetwork {
  MultilayerNetwork net;          // Q nodes; W^k matrices; inherited sigma/delay/synapse
  std::vector<int> multiplicity;  // |C_q|
  Clustering clustering;          // source clustering over the original nodes
};

/// Refuses (with the witness embedded in the message) when the clustering is
/// not equitable.
QuotientNetwork build_quotient(const MultilayerNetwork& net,
                               const Clustering& clustering,
                               double eps_abs = -1.0);

}  // namespace csyn
