#pragma once

// Shared network fixtures for the unit and acceptance suites.

#include <random>
#include <vector>

#include "csyn/network.hpp"
#include "csyn/partition.hpp"

namespace fixtures {

using csyn::Layer;
using csyn::Matrix;
using csyn::MultilayerNetwork;

inline void undirected(Matrix& a, int i, int j, double w = 1.0) {
  a(i, j) += w;
  a(j, i) += w;
}

/// 11-node, two-layer network with clusters {1,2,3,4},{5,6},{7,8,9},{10,11}
/// (1-based), a weight-2 edge 5-7 and the 5-6 link on the delayed layer. Its
/// transverse blocks have sizes {1,1,1,4}: one 1x1 per cluster C1, C3, C4 and
/// one 4x4 spanning C1, C2, C3.
inline MultilayerNetwork fig1_network(const std::string& node_model = "fhn",
                                      const std::string& syn1 = "electrical",
                                      const std::string& syn2 = "chem_sigmoid_exc",
                                      double sigma1 = 0.05, double sigma2 = 0.02,
                                      double delay2 = 5.0) {
  const int n = 11;
  Matrix a1 = Matrix::Zero(n, n);
  // C1 ring 1-2-3-4
  undirected(a1, 0, 1);
  undirected(a1, 1, 2);
  undirected(a1, 2, 3);
  undirected(a1, 3, 0);
  // C1 - C2
  undirected(a1, 0, 4);
  undirected(a1, 1, 5);
  undirected(a1, 2, 4);
  undirected(a1, 3, 5);
  // C1 - C3, constant row/column sums
  const int m[4][3] = {{2, 0, 1}, {0, 2, 1}, {1, 1, 1}, {1, 1, 1}};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 3; ++c)
      if (m[r][c]) undirected(a1, r, 6 + c, m[r][c]);
  // C2 - C3 with the weight-2 edge 5-7
  undirected(a1, 4, 6, 2.0);
  undirected(a1, 5, 7, 2.0);
  undirected(a1, 4, 8);
  undirected(a1, 5, 8);
  // C4 pair hung symmetrically off C2
  undirected(a1, 9, 10);
  undirected(a1, 9, 4);
  undirected(a1, 9, 5);
  undirected(a1, 10, 4);
  undirected(a1, 10, 5);

  Matrix a2 = Matrix::Zero(n, n);
  undirected(a2, 4, 5);  // the delayed 5-6 link

  MultilayerNetwork net;
  net.name = "fig1_class";
  net.node_types.assign(n, 1);
  net.node_models[1] = node_model;
  Layer l1;
  l1.adjacency = a1;
  l1.sigma = sigma1;
  l1.synapse_id = syn1;
  Layer l2;
  l2.adjacency = a2;
  l2.sigma = sigma2;
  l2.delay_ms = delay2;
  l2.synapse_id = syn2;
  net.layers = {l1, l2};
  return net;
}

/// Two identical nodes coupled both ways with unit weight.
inline MultilayerNetwork pair_network(const std::string& node_model = "fhn",
                                      const std::string& synapse = "electrical",
                                      double sigma = 0.5, double delay = 0.0) {
  MultilayerNetwork net;
  net.name = "pair";
  net.node_types = {1, 1};
  net.node_models[1] = node_model;
  Layer l;
  l.adjacency = Matrix::Zero(2, 2);
  l.adjacency(0, 1) = 1.0;
  l.adjacency(1, 0) = 1.0;
  l.sigma = sigma;
  l.delay_ms = delay;
  l.synapse_id = synapse;
  net.layers = {l};
  return net;
}

/// Driver node 1 feeding the identical pair {2,3} through a delayed synapse;
/// optional diffusive coupling inside the pair.
inline MultilayerNetwork driven_pair(double drive_w, double pair_w, double sigma,
                                     double delay,
                                     const std::string& node_model = "fhn",
                                     const std::string& synapse = "chem_sigmoid_exc") {
  MultilayerNetwork net;
  net.name = "driven_pair";
  net.node_types = {1, 1, 1};
  net.node_models[1] = node_model;
  Layer l;
  l.adjacency = Matrix::Zero(3, 3);
  l.adjacency(1, 0) = drive_w;
  l.adjacency(2, 0) = drive_w;
  if (pair_w > 0) {
    l.adjacency(1, 2) = pair_w;
    l.adjacency(2, 1) = pair_w;
  }
  l.sigma = sigma;
  l.delay_ms = delay;
  l.synapse_id = synapse;
  net.layers = {l};
  return net;
}

struct CorpusOptions {
  int max_nodes = 12;
  int max_layers = 2;
  bool plant_clusters = true;
  bool two_types = true;
  bool symmetric_planted = false;  // keeps planted inter-cluster links undirected
  std::vector<double> levels = {0.1, 0.5, 1.0};
};

/// Random quantized multilayer digraph. When clusters are planted, every
/// member of a planted cluster receives the same weight multiset from each
/// source group, so the planted partition is equitable by construction.
inline MultilayerNetwork random_network(std::mt19937_64& rng,
                                        const CorpusOptions& opts,
                                        std::vector<std::vector<int>>* planted) {
  std::uniform_int_distribution<int> nd(4, opts.max_nodes);
  std::uniform_int_distribution<int> ld(1, opts.max_layers);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = nd(rng);
  const int nl = ld(rng);

  MultilayerNetwork net;
  net.name = "corpus";
  net.node_types.assign(n, 1);
  net.node_models[1] = "fhn";
  if (opts.two_types && u(rng) < 0.3) {
    net.node_models[2] = "hindmarsh_rose";
    for (int i = 0; i < n; ++i)
      if (u(rng) < 0.25) net.node_types[i] = 2;
  }

  // plant 0..2 nontrivial clusters over nodes of type 1
  std::vector<std::vector<int>> groups;
  std::vector<int> group_of(n, -1);
  if (planted) planted->clear();
  if (opts.plant_clusters && u(rng) < 0.7) {
    std::vector<int> pool;
    for (int i = 0; i < n; ++i)
      if (net.node_types[i] == 1) pool.push_back(i);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::uniform_int_distribution<int> szd(2, 4);
    size_t at = 0;
    const int want = 1 + (u(rng) < 0.4 ? 1 : 0);
    for (int g = 0; g < want; ++g) {
      const int size = szd(rng);
      if (at + size > pool.size()) break;
      std::vector<int> cl(pool.begin() + at, pool.begin() + at + size);
      std::sort(cl.begin(), cl.end());
      at += size;
      groups.push_back(cl);
    }
  }
  for (size_t g = 0; g < groups.size(); ++g)
    for (int i : groups[g]) group_of[i] = static_cast<int>(g);
  if (planted) *planted = groups;

  std::uniform_int_distribution<int> lvl(0, static_cast<int>(opts.levels.size()) - 1);
  auto weight = [&]() { return opts.levels[lvl(rng)]; };

  for (int k = 0; k < nl; ++k) {
    Matrix a = Matrix::Zero(n, n);
    // edges into planted-cluster members: same multiset per member
    for (size_t g = 0; g < groups.size(); ++g) {
      const auto& cl = groups[g];
      // from each planted source group (including itself)
      for (size_t src = 0; src < groups.size(); ++src) {
        if (u(rng) < 0.45) continue;
        const auto& sg = groups[src];
        const int max_r = static_cast<int>(sg.size()) - (src == g ? 1 : 0);
        if (max_r < 1) continue;
        std::uniform_int_distribution<int> rd(1, max_r);
        const int r = rd(rng);
        std::vector<double> multiset;
        for (int t = 0; t < r; ++t) multiset.push_back(weight());
        if (opts.symmetric_planted && src != g) {
          // undirected biregular pattern needs equal sizes; use a circulant
          if (sg.size() != cl.size()) continue;
          const int sz = static_cast<int>(sg.size());
          for (int t = 0; t < r; ++t) {
            const int shift = 1 + t;
            for (int i = 0; i < sz; ++i) {
              const int jj = sg[(i + shift) % sz];
              a(cl[i], jj) = multiset[t];
              a(jj, cl[i]) = multiset[t];
            }
          }
          continue;
        }
        if (opts.symmetric_planted && src == g) {
          // symmetric circulant inside the cluster
          const int sz = static_cast<int>(cl.size());
          const double w = multiset[0];
          for (int i = 0; i < sz; ++i) {
            const int jj = cl[(i + 1) % sz];
            if (cl[i] != jj) {
              a(cl[i], jj) = w;
              a(jj, cl[i]) = w;
            }
          }
          continue;
        }
        for (int i : cl) {
          std::vector<int> sources = sg;
          if (src == g) std::erase(sources, i);
          std::shuffle(sources.begin(), sources.end(), rng);
          for (int t = 0; t < r; ++t) a(i, sources[t]) = multiset[t];
        }
      }
      // from singleton sources: same weight into every member, or nothing
      for (int j = 0; j < n; ++j) {
        if (group_of[j] >= 0) continue;
        if (u(rng) < 0.25) {
          const double w = weight();
          for (int i : cl)
            if (i != j) a(i, j) = w;
        }
      }
    }
    // plain random rows for singleton receivers
    for (int i = 0; i < n; ++i) {
      if (group_of[i] >= 0) continue;
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        if (u(rng) < 0.25) a(i, j) = weight();
      }
    }
    Layer ly;
    ly.adjacency = std::move(a);
    ly.sigma = 0.05;
    ly.delay_ms = k == 0 ? 0.0 : 5.0;
    ly.synapse_id = k == 0 ? "electrical" : "chem_sigmoid_exc";
    net.layers.push_back(std::move(ly));
  }
  return net;
}

/// Planted-cluster rate-model network for dynamics tests: smooth, stable and
/// cheap to integrate.
inline MultilayerNetwork random_rate_network(std::mt19937_64& rng,
                                             std::vector<std::vector<int>>* planted,
                                             int max_nodes = 10) {
  CorpusOptions opts;
  opts.max_nodes = max_nodes;
  opts.two_types = false;
  opts.plant_clusters = true;
  MultilayerNetwork net = random_network(rng, opts, planted);
  net.node_models[1] = "rate_ei";
  for (size_t k = 0; k < net.layers.size(); ++k) {
    net.layers[k].synapse_id = "rate_linear";
    net.layers[k].sigma = 0.02;
    net.layers[k].delay_ms = k == 0 ? 0.0 : 4.0;
  }
  return net;
}

}  // namespace fixtures
