#include "csyn/irr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace csyn {

namespace {

double block_tolerance(const MultilayerNetwork& net, double eps_block) {
  if (eps_block > 0) return eps_block;
  return 1e-8 * std::max(1.0, net.max_abs_weight());
}

/// Connected components of the symmetrized nonzero pattern of the transverse
/// parts, over a subset of rows.
std::vector<std::vector<int>> pattern_components(
    const std::vector<Matrix>& trans, const std::vector<int>& rows, double eps) {
  const int n = static_cast<int>(rows.size());
  std::vector<std::vector<int>> adj(n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      bool linked = false;
      for (const Matrix& m : trans)
        if (std::abs(m(rows[a], rows[b])) > eps ||
            std::abs(m(rows[b], rows[a])) > eps) {
          linked = true;
          break;
        }
      if (linked) {
        adj[a].push_back(b);
        adj[b].push_back(a);
      }
    }
  std::vector<char> seen(n, 0);
  std::vector<std::vector<int>> comps;
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<int> stack{s}, comp;
    seen[s] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      comp.push_back(rows[u]);
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

/// Generic symmetric element of the commutant of {M_k} restricted to
/// cluster-group block-diagonal matrices, eigendecomposed group by group.
/// Returns the D x D rotation (identity when the commutant is trivial).
Matrix restricted_commutant_rotation(const std::vector<Matrix>& trans,
                                     const std::vector<int>& groups,
                                     std::mt19937_64& rng) {
  const int d = static_cast<int>(groups.size());
  // basis of the restricted symmetric space
  std::vector<std::pair<int, int>> basis;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      if (groups[i] == groups[j]) basis.emplace_back(i, j);
  const int nb = static_cast<int>(basis.size());
  if (nb == 0) return Matrix::Identity(d, d);

  const int nm = static_cast<int>(trans.size());
  Matrix k(nm * d * d, nb);
  Matrix e = Matrix::Zero(d, d);
  for (int b = 0; b < nb; ++b) {
    auto [i, j] = basis[b];
    e(i, j) = 1.0;
    e(j, i) = 1.0;
    for (int m = 0; m < nm; ++m) {
      const Matrix c = e * trans[m] - trans[m] * e;
      k.block(m * d * d, b, d * d, 1) =
          Eigen::Map<const Vector>(c.data(), d * d);
    }
    e(i, j) = 0.0;
    e(j, i) = 0.0;
  }

  Eigen::JacobiSVD<Matrix> svd(k, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double tol = std::max(smax, 1.0) * 1e-10;
  std::vector<int> null_cols;
  for (int c = 0; c < static_cast<int>(svd.matrixV().cols()); ++c)
    if (c >= sv.size() || sv(c) <= tol) null_cols.push_back(c);
  if (null_cols.empty()) return Matrix::Identity(d, d);

  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector coef(nb);
  coef.setZero();
  for (int c : null_cols) {
    const double u = gauss(rng);
    coef += u * svd.matrixV().col(c);
  }
  Matrix x = Matrix::Zero(d, d);
  for (int b = 0; b < nb; ++b) {
    auto [i, j] = basis[b];
    x(i, j) += coef[b];
    if (i != j) x(j, i) += coef[b];
  }

  // eigendecompose per group so the rotation never mixes clusters
  Matrix z = Matrix::Zero(d, d);
  const int ng = 1 + *std::max_element(groups.begin(), groups.end());
  for (int g = 0; g < ng; ++g) {
    std::vector<int> ids;
    for (int i = 0; i < d; ++i)
      if (groups[i] == g) ids.push_back(i);
    if (ids.empty()) continue;
    const int dg = static_cast<int>(ids.size());
    Matrix xg(dg, dg);
    for (int a = 0; a < dg; ++a)
      for (int b = 0; b < dg; ++b) xg(a, b) = x(ids[a], ids[b]);
    Eigen::SelfAdjointEigenSolver<Matrix> es(xg);
    Matrix vg = es.eigenvectors();
    // canonical sign: largest-magnitude entry positive
    for (int c = 0; c < dg; ++c) {
      int arg = 0;
      vg.col(c).cwiseAbs().maxCoeff(&arg);
      if (vg(arg, c) < 0) vg.col(c) = -vg.col(c);
    }
    // new row r (over ids) = eigvec r applied to old rows
    for (int r = 0; r < dg; ++r)
      for (int cidx = 0; cidx < dg; ++cidx) z(ids[r], ids[cidx]) = vg(cidx, r);
  }
  return z;
}

}  // namespace

AdmissibilityReport check_directed_admissible(const MultilayerNetwork& net,
                                              const Clustering& clustering) {
  AdmissibilityReport rep;
  rep.undirected = true;
  const int n = net.size();
  std::vector<char> trivial(clustering.count(), 0);
  for (int q = 0; q < clustering.count(); ++q)
    trivial[q] = clustering.clusters[q].size() == 1;

  for (int k = 0; k < net.num_layers(); ++k) {
    const Matrix& a = net.layers[k].adjacency;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (a(i, j) != a(j, i)) {
          rep.undirected = false;
          const bool touches_trivial = trivial[clustering.assignment[i]] ||
                                       trivial[clustering.assignment[j]];
          if (!touches_trivial) rep.offending.push_back({k, i, j});
        }
  }
  rep.ok = rep.undirected || rep.offending.empty();
  return rep;
}

IrrTransform build_transform(const MultilayerNetwork& net,
                             const Clustering& clustering,
                             const IrrOptions& opts) {
  const int n = net.size();
  const int q = clustering.count();
  const double eps = block_tolerance(net, opts.eps_block);

  const EquitabilityResult eq = is_equitable(net, clustering);
  if (!eq.equitable)
    throw ValidationError("build_transform: clustering is not equitable");

  const AdmissibilityReport adm = check_directed_admissible(net, clustering);
  if (opts.require_admissible && !adm.ok) {
    std::ostringstream msg;
    msg << "network outside the supported directed class: " << adm.offending.size()
        << " asymmetric link(s) between nontrivial clusters (first: layer "
        << (adm.offending[0].layer + 1) << ", nodes " << (adm.offending[0].i + 1)
        << "-" << (adm.offending[0].j + 1) << ")";
    throw AdmissibilityError(msg.str());
  }

  IrrTransform irr;
  irr.sync_dim = q;
  irr.admissible = adm.ok;
  irr.T = Matrix::Zero(n, n);

  // sync rows: normalized cluster indicators
  for (int p = 0; p < q; ++p) {
    const auto& members = clustering.clusters[p];
    const double v = 1.0 / std::sqrt(static_cast<double>(members.size()));
    for (int i : members) irr.T(p, i) = v;
  }
  // transverse rows: Helmert basis of each cluster's zero-sum subspace
  irr.row_support.clear();
  int row = q;
  for (int p = 0; p < q; ++p) {
    const auto& members = clustering.clusters[p];
    const int c = static_cast<int>(members.size());
    for (int r = 1; r < c; ++r) {
      const double denom = std::sqrt(static_cast<double>(r) * (r + 1));
      for (int s = 0; s < r; ++s) irr.T(row, members[s]) = 1.0 / denom;
      irr.T(row, members[r]) = -r / denom;
      irr.row_support.push_back(p);
      ++row;
    }
  }

  const int d = n - q;
  std::mt19937_64 rng(opts.seed + 0x9e3779b97f4a7c15ull);

  auto transverse_parts = [&](const Matrix& t) {
    std::vector<Matrix> out;
    out.reserve(net.num_layers());
    for (int k = 0; k < net.num_layers(); ++k) {
      const Matrix b = t * net.layers[k].adjacency * t.transpose();
      out.push_back(b.block(q, q, d, d));
    }
    return out;
  };

  // refine: pattern components, then cluster-preserving rotations from the
  // restricted commutant, to a fixed point
  std::vector<std::vector<int>> comps;
  if (d > 0) {
    std::vector<int> all(d);
    std::iota(all.begin(), all.end(), 0);
    for (int round = 0; round < opts.max_rounds; ++round) {
      const std::vector<Matrix> trans = transverse_parts(irr.T);
      comps = pattern_components(trans, all, eps);
      const Matrix z = restricted_commutant_rotation(trans, irr.row_support, rng);
      Matrix t2 = irr.T;
      t2.block(q, 0, d, n) = z * irr.T.block(q, 0, d, n);
      const std::vector<Matrix> trans2 = transverse_parts(t2);
      const auto comps2 = pattern_components(trans2, all, eps);
      if (comps2.size() > comps.size()) {
        irr.T = std::move(t2);
        comps = comps2;
      } else {
        break;  // fixed point
      }
    }
    // canonical transverse order: blocks by (smallest supporting cluster,
    // then first row), rows within a block kept in ascending order
    std::sort(comps.begin(), comps.end(), [&](const auto& a, const auto& b) {
      const int ca = irr.row_support[a.front()], cb = irr.row_support[b.front()];
      int mina = ca, minb = cb;
      for (int r : a) mina = std::min(mina, irr.row_support[r]);
      for (int r : b) minb = std::min(minb, irr.row_support[r]);
      if (mina != minb) return mina < minb;
      return a.front() < b.front();
    });
    std::vector<int> perm;
    for (const auto& c : comps) perm.insert(perm.end(), c.begin(), c.end());
    Matrix tperm(d, n);
    std::vector<int> support(d);
    for (int r = 0; r < d; ++r) {
      tperm.row(r) = irr.T.row(q + perm[r]);
      support[r] = irr.row_support[perm[r]];
    }
    irr.T.block(q, 0, d, n) = tperm;
    irr.row_support = std::move(support);
    int at = 0;
    for (const auto& c : comps) {
      TransverseBlock blk;
      for (size_t j = 0; j < c.size(); ++j) {
        blk.rows.push_back(q + at);
        blk.clusters.insert(irr.row_support[at]);
        ++at;
      }
      irr.blocks.push_back(std::move(blk));
    }
  }

  irr.B.clear();
  for (int k = 0; k < net.num_layers(); ++k)
    irr.B.push_back(irr.T * net.layers[k].adjacency * irr.T.transpose());

  irr.orth_residual =
      (irr.T * irr.T.transpose() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();

  // residuals: off-block transverse entries and the lower-left block
  irr.block_residual = 0.0;
  irr.lower_left_residual = 0.0;
  std::vector<int> block_of(d, -1);
  for (size_t b = 0; b < irr.blocks.size(); ++b)
    for (int r : irr.blocks[b].rows) block_of[r - q] = static_cast<int>(b);
  for (const Matrix& bmat : irr.B) {
    if (d > 0 && q > 0)
      irr.lower_left_residual = std::max(
          irr.lower_left_residual, bmat.block(q, 0, d, q).cwiseAbs().maxCoeff());
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (block_of[i] != block_of[j])
          irr.block_residual =
              std::max(irr.block_residual, std::abs(bmat(q + i, q + j)));
  }

  if (irr.block_residual > eps) {
    std::ostringstream msg;
    msg << "block refinement failed to reach tolerance: residual "
        << irr.block_residual << " > " << eps;
    throw NumericalError(msg.str());
  }
  return irr;
}

std::map<int, std::set<int>> block_cluster_map(const IrrTransform& irr) {
  std::map<int, std::set<int>> out;
  for (size_t b = 0; b < irr.blocks.size(); ++b)
    for (int c : irr.blocks[b].clusters) out[c].insert(static_cast<int>(b));
  return out;
}

std::vector<std::vector<int>> intertwined_groups(const IrrTransform& irr,
                                                 const Clustering& clustering) {
  // union-find over nontrivial clusters, joined when they share a block
  std::map<int, int> parent;
  for (int c = 0; c < clustering.count(); ++c)
    if (clustering.clusters[c].size() >= 2) parent[c] = c;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& blk : irr.blocks) {
    int first = -1;
    for (int c : blk.clusters) {
      if (!parent.count(c)) continue;  // trivial cluster (cannot happen)
      if (first < 0)
        first = c;
      else
        parent[find(c)] = find(first);
    }
  }
  std::map<int, std::vector<int>> groups;
  for (const auto& [c, p] : parent) groups[find(c)].push_back(c);
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace csyn
