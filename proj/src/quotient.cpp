#include "csyn/quotient.hpp"

#include <algorithm>
#include <sstream>

namespace csyn {

QuotientNetwork build_quotient(const MultilayerNetwork& net,
                               const Clustering& clustering, double eps_abs) {
  if (eps_abs < 0) eps_abs = signature_tolerance(net);
  const EquitabilityResult eq = is_equitable(net, clustering, eps_abs);
  if (!eq.equitable) {
    std::ostringstream msg;
    msg << "clustering is not equitable";
    if (eq.witness) {
      const auto& w = *eq.witness;
      if (w.layer < 0)
        msg << ": clusters " << (w.cluster_p + 1) << " mixes node types (nodes "
            << (w.node_i + 1) << ", " << (w.node_i2 + 1) << ")";
      else
        msg << ": layer " << (w.layer + 1) << ", nodes " << (w.node_i + 1)
            << " and " << (w.node_i2 + 1) << " receive " << w.sum_i << " vs "
            << w.sum_i2 << " from cluster " << (w.cluster_q + 1);
    }
    throw ValidationError(msg.str());
  }

  const int q = clustering.count();
  QuotientNetwork out;
  out.clustering = clustering;
  out.multiplicity.resize(q);
  for (int p = 0; p < q; ++p)
    out.multiplicity[p] = static_cast<int>(clustering.clusters[p].size());

  out.net.name = net.name.empty() ? "quotient" : net.name + "_quotient";
  out.net.node_models = net.node_models;
  out.net.node_types.resize(q);
  for (int p = 0; p < q; ++p)
    out.net.node_types[p] = net.node_types[clustering.clusters[p].front()];

  for (int k = 0; k < net.num_layers(); ++k) {
    const Matrix& a = net.layers[k].adjacency;
    Layer ly;
    ly.sigma = net.layers[k].sigma;
    ly.delay_ms = net.layers[k].delay_ms;
    ly.synapse_id = net.layers[k].synapse_id;
    ly.allow_self_coupling = true;  // W_pp keeps the within-cluster in-weight
    Matrix w(q, q);
    for (int p = 0; p < q; ++p) {
      const int rep = clustering.clusters[p].front();  // smallest member
      for (int c = 0; c < q; ++c) {
        std::vector<double> vals;
        vals.reserve(clustering.clusters[c].size());
        for (int j : clustering.clusters[c]) vals.push_back(a(rep, j));
        std::sort(vals.begin(), vals.end());
        double s = 0.0;
        for (double v : vals) s += v;
        w(p, c) = s;
      }
    }
    ly.adjacency = std::move(w);
    out.net.layers.push_back(std::move(ly));
  }
  return out;
}

Trajectory lift_trajectory(const Trajectory& qtraj, const Clustering& clustering) {
  if (qtraj.num_nodes != clustering.count())
    throw ValidationError("lift_trajectory: trajectory has " +
                          std::to_string(qtraj.num_nodes) +
                          " nodes, clustering has " +
                          std::to_string(clustering.count()) + " clusters");
  Trajectory out;
  out.t0 = qtraj.t0;
  out.dt = qtraj.dt;
  out.dim = qtraj.dim;
  out.num_nodes = clustering.num_nodes();
  out.samples.reserve(qtraj.samples.size());
  for (const Matrix& s : qtraj.samples) {
    Matrix full(qtraj.dim, out.num_nodes);
    for (int i = 0; i < out.num_nodes; ++i)
      full.col(i) = s.col(clustering.assignment[i]);
    out.samples.push_back(std::move(full));
  }
  return out;
}

}  // namespace csyn
