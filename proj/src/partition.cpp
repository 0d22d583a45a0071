#include "csyn/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace csyn {

namespace {

/// Sum of the in-weights from `members` into node i, accumulated in ascending
/// value order so equal multisets produce bitwise-equal sums.
double sorted_in_sum(const Matrix& a, int i, const std::vector<int>& members) {
  double buf[64];
  std::vector<double> heap;
  double* vals = buf;
  const size_t m = members.size();
  if (m > 64) {
    heap.resize(m);
    vals = heap.data();
  }
  size_t c = 0;
  for (int j : members) vals[c++] = a(i, j);
  std::sort(vals, vals + c);
  double s = 0.0;
  for (size_t k = 0; k < c; ++k) s += vals[k];
  return s;
}

}  // namespace

Clustering clustering_from_assignment(const std::vector<int>& labels) {
  const int n = static_cast<int>(labels.size());
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[labels[i]].push_back(i);
  std::vector<std::vector<int>> clusters;
  for (auto& [lbl, members] : groups) clusters.push_back(std::move(members));
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  Clustering c;
  c.clusters = std::move(clusters);
  c.assignment.assign(n, -1);
  for (int q = 0; q < static_cast<int>(c.clusters.size()); ++q)
    for (int i : c.clusters[q]) c.assignment[i] = q;
  return c;
}

double signature_tolerance(const MultilayerNetwork& net, double eps_rel) {
  return eps_rel * std::max(1.0, net.max_abs_weight());
}

EquitabilityResult is_equitable(const MultilayerNetwork& net,
                                const Clustering& clustering, double eps_abs) {
  const int n = net.size();
  if (clustering.num_nodes() != n)
    throw ValidationError("clustering covers " +
                          std::to_string(clustering.num_nodes()) +
                          " nodes, network has " + std::to_string(n));
  std::vector<char> seen(n, 0);
  for (const auto& cl : clustering.clusters)
    for (int i : cl) {
      if (i < 0 || i >= n || seen[i])
        throw ValidationError("malformed partition: node " +
                              std::to_string(i + 1) +
                              " missing, duplicated or out of range");
      seen[i] = 1;
    }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw ValidationError("malformed partition: not all nodes covered");

  if (eps_abs < 0) eps_abs = signature_tolerance(net);

  EquitabilityResult res;
  for (int p = 0; p < clustering.count(); ++p) {
    const auto& cp = clustering.clusters[p];
    for (size_t a = 1; a < cp.size(); ++a)
      if (net.node_types[cp[a]] != net.node_types[cp[0]]) {
        res.equitable = false;
        EquitabilityWitness w;
        w.layer = -1;  // type mismatch, not a weight mismatch
        w.cluster_p = p;
        w.cluster_q = p;
        w.node_i = cp[0];
        w.node_i2 = cp[a];
        res.witness = w;
        return res;
      }
  }

  for (int k = 0; k < net.num_layers(); ++k) {
    const Matrix& a = net.layers[k].adjacency;
    for (int p = 0; p < clustering.count(); ++p) {
      const auto& cp = clustering.clusters[p];
      if (cp.size() < 2) continue;
      for (int q = 0; q < clustering.count(); ++q) {
        const auto& cq = clustering.clusters[q];
        const double ref = sorted_in_sum(a, cp[0], cq);
        for (size_t m = 1; m < cp.size(); ++m) {
          const double s = sorted_in_sum(a, cp[m], cq);
          if (std::abs(s - ref) > eps_abs) {
            res.equitable = false;
            EquitabilityWitness w;
            w.layer = k;
            w.cluster_p = p;
            w.cluster_q = q;
            w.node_i = cp[0];
            w.node_i2 = cp[m];
            w.sum_i = ref;
            w.sum_i2 = s;
            res.witness = w;
            return res;
          }
        }
      }
    }
  }
  res.equitable = true;
  return res;
}

Clustering coarsest_equitable_partition(const MultilayerNetwork& net,
                                        double eps_abs) {
  const int n = net.size();
  const int nl = net.num_layers();
  if (eps_abs < 0) eps_abs = signature_tolerance(net);

  // initial colors: node types
  std::vector<int> color(n);
  {
    std::map<int, int> remap;
    for (int i = 0; i < n; ++i) {
      auto [it, fresh] = remap.try_emplace(net.node_types[i],
                                           static_cast<int>(remap.size()));
      color[i] = it->second;
      (void)fresh;
    }
  }

  int ncolors = 1 + *std::max_element(color.begin(), color.end());
  std::vector<std::vector<double>> sig(n);

  for (int round = 0; round <= n; ++round) {
    std::vector<std::vector<int>> groups(ncolors);
    for (int i = 0; i < n; ++i) groups[color[i]].push_back(i);

    // full signature over all layers and current colors, jointly
    for (int i = 0; i < n; ++i) {
      auto& s = sig[i];
      s.clear();
      s.reserve(static_cast<size_t>(nl) * ncolors);
      for (int k = 0; k < nl; ++k) {
        const Matrix& a = net.layers[k].adjacency;
        for (int c = 0; c < ncolors; ++c) s.push_back(sorted_in_sum(a, i, groups[c]));
      }
    }

    // sort by (color, signature); split where adjacent differ beyond eps
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
      if (color[x] != color[y]) return color[x] < color[y];
      return sig[x] < sig[y];
    });

    std::vector<int> next(n);
    int nc = 0;
    next[order[0]] = 0;
    for (int r = 1; r < n; ++r) {
      const int prev = order[r - 1], cur = order[r];
      bool differs = color[prev] != color[cur];
      if (!differs)
        for (size_t c = 0; c < sig[cur].size(); ++c)
          if (std::abs(sig[cur][c] - sig[prev][c]) > eps_abs) {
            differs = true;
            break;
          }
      if (differs) ++nc;
      next[cur] = nc;
    }
    ++nc;

    if (nc == ncolors) break;  // fixed point
    color = std::move(next);
    ncolors = nc;
  }

  return clustering_from_assignment(color);
}

std::vector<std::vector<int>> nontrivial_clusters(const Clustering& clustering) {
  std::vector<std::vector<int>> out;
  for (const auto& c : clustering.clusters)
    if (c.size() >= 2) out.push_back(c);
  return out;
}

}  // namespace csyn
