#include "csyn/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace csyn {

VariationalSystem build_variational(const QuotientNetwork& q,
                                    const IrrTransform& irr, int block_index) {
  if (block_index < 0 || block_index >= static_cast<int>(irr.blocks.size()))
    throw ValidationError("variational: block index out of range");
  VariationalSystem vs;
  vs.quotient = &q;
  vs.irr = &irr;
  vs.block_index = block_index;
  const TransverseBlock& blk = irr.blocks[block_index];
  vs.rows = blk.rows;
  for (int r : blk.rows) vs.row_cluster.push_back(irr.cluster_of_row(r));
  const int nb = static_cast<int>(blk.rows.size());
  for (const Matrix& b : irr.B) {
    Matrix sub(nb, nb);
    for (int a = 0; a < nb; ++a)
      for (int c = 0; c < nb; ++c) sub(a, c) = b(blk.rows[a], blk.rows[c]);
    vs.block_b.push_back(std::move(sub));
  }
  return vs;
}

SyncSource prepare_sync(const QuotientNetwork& q, const ModelRegistry& registry,
                        double dt, double transient, std::uint64_t seed,
                        double divergence_bound) {
  SyncSource src;
  src.sys = std::make_shared<NetworkSystem>(q.net, registry);
  Matrix x0 = src.sys->typical_state();
  std::mt19937_64 rng(seed ^ 0xc2b2ae3d27d4eb4full);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int c = 0; c < x0.cols(); ++c)
    for (int r = 0; r < src.sys->model_dim(c); ++r) x0(r, c) += 0.01 * gauss(rng);
  src.stepper =
      std::make_shared<DdeStepper>(*src.sys, constant_history(x0), 0.0, dt);
  const long n = std::lround(transient / dt);
  for (long s = 0; s < n; ++s) {
    src.stepper->step();
    if (src.stepper->state().cwiseAbs().maxCoeff() > divergence_bound)
      throw NumericalError("synchronous trajectory diverged at t=" +
                           format_full(src.stepper->time()));
  }
  return src;
}

namespace {

/// Co-integrates the quotient and one block's variational system. The
/// perturbation state keeps its own (state, derivative) ring so delayed
/// variational reads interpolate exactly like the quotient's; renormalization
/// rescales the live state, the ring and the pre-start history together.
class BlockVariationalStepper {
 public:
  BlockVariationalStepper(const VariationalSystem& vs, DdeStepper qstep,
                          Matrix eta0)
      : vs_(&vs), q_(std::move(qstep)), eta_(std::move(eta0)), eta_pre_(eta_) {
    sys_ = &q_.system();
    n_ = sys_->dim();
    nq_ = sys_->nodes();
    nb_ = static_cast<int>(vs.rows.size());
    nl_ = static_cast<int>(vs.block_b.size());
    t0_ = q_.time();
    dt_ = q_.dt();
    const long m = std::lround(q_.max_delay() / dt_);
    cap_ = static_cast<int>(m) + 4;
    ring_x_.resize(cap_);
    ring_f_.resize(cap_);
    clusters_in_block_.assign(vs.row_cluster.begin(), vs.row_cluster.end());
    std::sort(clusters_in_block_.begin(), clusters_in_block_.end());
    clusters_in_block_.erase(
        std::unique(clusters_in_block_.begin(), clusters_in_block_.end()),
        clusters_in_block_.end());
    jac_.assign(clusters_in_block_.size(), Matrix(n_, n_));
    pre_.resize(nl_);
    dpre_.resize(nl_);
    for (int k = 0; k < nl_; ++k) {
      pre_[k].resize(nq_);
      dpre_[k] = Matrix(n_, nq_);
    }
    vk_.assign(4, Matrix(n_, nb_));
    eta_delayed_.resize(nl_);
    scratch_.resize(n_);
  }

  double time() const { return t0_ + steps_ * dt_; }
  const Matrix& eta() const { return eta_; }
  const DdeStepper& quotient() const { return q_; }

  void step() {
    const auto obs = [this](int stage, double t, const Matrix& xs,
                            const std::vector<const Matrix*>& delayed) {
      stage_eta(stage);
      var_rhs(t, xs, delayed, es_, vk_[stage]);
      if (stage == 0) {
        ring_newest_ = steps_;
        ring_x_[steps_ % cap_] = eta_;
        ring_f_[steps_ % cap_] = vk_[0];
      }
    };
    q_.step(obs);
    eta_ += (dt_ / 6.0) * (vk_[0] + 2.0 * vk_[1] + 2.0 * vk_[2] + vk_[3]);
    ++steps_;
    if (!eta_.allFinite())
      throw NumericalError("variational state diverged at t=" +
                           format_full(time()));
  }

  /// Norm of the perturbation before rescaling everything by 1/norm.
  double renormalize() {
    const double f = eta_.norm();
    if (!(f > 0.0) || !std::isfinite(f))
      throw NumericalError("variational norm degenerate at t=" +
                           format_full(time()));
    const double inv = 1.0 / f;
    eta_ *= inv;
    eta_pre_ *= inv;
    for (int i = 0; i < cap_; ++i) {
      if (ring_x_[i].size()) ring_x_[i] *= inv;
      if (ring_f_[i].size()) ring_f_[i] *= inv;
    }
    return f;
  }

 private:
  void stage_eta(int stage) {
    switch (stage) {
      case 0: es_ = eta_; break;
      case 1: es_ = eta_ + (0.5 * dt_) * vk_[0]; break;
      case 2: es_ = eta_ + (0.5 * dt_) * vk_[1]; break;
      default: es_ = eta_ + dt_ * vk_[2]; break;
    }
  }

  Matrix read_eta(double t) const {
    const double eps = 1e-6 * dt_;
    if (t <= t0_ + eps) return eta_pre_;
    const double s = (t - t0_) / dt_;
    const long idx = std::lround(s);
    if (std::abs(s - static_cast<double>(idx)) < 1e-6) {
      if (idx == steps_) return eta_;
      if (idx > ring_newest_ || idx < ring_newest_ - cap_ + 1)
        throw NumericalError("variational read outside stored horizon");
      return ring_x_[idx % cap_];
    }
    const long i = static_cast<long>(std::floor(s));
    if (i < 0 || i + 1 > ring_newest_ || i < ring_newest_ - cap_ + 1)
      throw NumericalError("variational read outside stored horizon");
    const double th = s - i;
    const double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
    const double h10 = th * (1 - th) * (1 - th);
    const double h01 = th * th * (3 - 2 * th);
    const double h11 = th * th * (th - 1);
    return h00 * ring_x_[i % cap_] + (h10 * dt_) * ring_f_[i % cap_] +
           h01 * ring_x_[(i + 1) % cap_] + (h11 * dt_) * ring_f_[(i + 1) % cap_];
  }

  ///   deta_m = J_{q(m)}(t) eta_m
  ///          + sum_k sigma_k sum_m' B^k(m,m') gain_k(V_{q(m)}(t))
  ///                      <dpre_k(s_{q(m')}(t-d_k)), eta_m'(t-d_k)>  on row 0
  void var_rhs(double t, const Matrix& s, const std::vector<const Matrix*>& delayed,
               const Matrix& eta, Matrix& out) {
    const MultilayerNetwork& qnet = sys_->network();
    // per-layer pre-signals and pre-gradients at the delayed quotient states
    for (int k = 0; k < nl_; ++k) {
      const SynapseModel& syn = sys_->synapse(k);
      const int slot = sys_->synapse_state_index(k);
      const Matrix& sd = *delayed[k];
      for (int p = 0; p < nq_; ++p) {
        pre_[k][p] = syn.pre(sd.col(p), slot);
        syn.dpre(sd.col(p), slot, scratch_);
        dpre_[k].col(p) = scratch_;
      }
    }
    // per-cluster self Jacobians
    for (size_t ci = 0; ci < clusters_in_block_.size(); ++ci) {
      const int qc = clusters_in_block_[ci];
      Matrix& jac = jac_[ci];
      sys_->local_jacobian(qc, s.col(qc), jac);
      const double v = s(0, qc);
      for (int k = 0; k < nl_; ++k) {
        const SynapseModel& syn = sys_->synapse(k);
        const Layer& ly = qnet.layers[k];
        const double u = ly.adjacency.row(qc).dot(pre_[k]);
        const double rowsum = ly.adjacency.row(qc).sum();
        jac(0, 0) += ly.sigma * (syn.dgain(v) * u + syn.doffset(v) * rowsum);
      }
    }
    // delayed eta per layer (zero-delay layers use the live stage value)
    const auto& dl = q_.layer_delays();
    for (int k = 0; k < nl_; ++k)
      eta_delayed_[k] = dl[k] == 0.0 ? eta : read_eta(t - dl[k]);

    for (int m = 0; m < nb_; ++m) {
      const int qm = vs_->row_cluster[m];
      const size_t ci =
          std::lower_bound(clusters_in_block_.begin(), clusters_in_block_.end(),
                           qm) -
          clusters_in_block_.begin();
      out.col(m).noalias() = jac_[ci] * eta.col(m);
      const double v = s(0, qm);
      for (int k = 0; k < nl_; ++k) {
        const SynapseModel& syn = sys_->synapse(k);
        const double sg = qnet.layers[k].sigma * syn.gain(v);
        const Matrix& bb = vs_->block_b[k];
        const Matrix& ed = eta_delayed_[k];
        double acc = 0.0;
        for (int m2 = 0; m2 < nb_; ++m2) {
          const double w = bb(m, m2);
          if (w == 0.0) continue;
          acc += w * dpre_[k].col(vs_->row_cluster[m2]).dot(ed.col(m2));
        }
        out(0, m) += sg * acc;
      }
    }
  }

  const VariationalSystem* vs_;
  DdeStepper q_;
  const NetworkSystem* sys_;
  int n_ = 0, nq_ = 0, nb_ = 0, nl_ = 0;
  double t0_ = 0.0, dt_ = 0.0;
  long steps_ = 0;

  Matrix eta_;
  Matrix eta_pre_;  // pre-start constant history, rescaled with everything else
  int cap_ = 0;
  long ring_newest_ = -1;
  std::vector<Matrix> ring_x_, ring_f_;

  std::vector<int> clusters_in_block_;
  std::vector<Matrix> jac_;
  std::vector<Vector> pre_;
  std::vector<Matrix> dpre_;
  std::vector<Matrix> vk_;
  Matrix es_;
  std::vector<Matrix> eta_delayed_;
  Vector scratch_;
};

}  // namespace

BlockMle block_mle(const VariationalSystem& vs, const SyncSource& sync,
                   const MleOptions& opts) {
  BlockMle res;
  res.block = vs.block_index;
  if (opts.horizon < 10.0 * opts.renorm_interval)
    throw ValidationError("mle horizon shorter than 10 renormalization windows");
  if (std::abs(sync.stepper->dt() - opts.dt) > 1e-12 * opts.dt)
    throw ValidationError("sync source dt does not match mle dt");

  const NetworkSystem& qsys = *sync.sys;
  const int n = qsys.dim();
  const int nb = static_cast<int>(vs.rows.size());

  // seeded perturbation on the active components of each coordinate's cluster
  std::mt19937_64 rng(opts.seed * 0x9e3779b97f4a7c15ull + 0x85ebca6bull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix eta0 = Matrix::Zero(n, nb);
  for (int m = 0; m < nb; ++m)
    for (int c = 0; c < n; ++c)
      if (qsys.component_active(vs.row_cluster[m], c)) eta0(c, m) = gauss(rng);
  eta0 /= eta0.norm();

  const long renorm_steps = std::max<long>(1, std::lround(opts.renorm_interval / opts.dt));
  const long align_windows = std::max<long>(0, std::lround(opts.align / opts.renorm_interval));
  const long windows = std::max<long>(10, std::lround(opts.horizon / opts.renorm_interval));

  try {
    BlockVariationalStepper bvs(vs, *sync.stepper, std::move(eta0));
    std::vector<double> rates;
    rates.reserve(windows);
    for (long w = 0; w < align_windows + windows; ++w) {
      for (long s = 0; s < renorm_steps; ++s) bvs.step();
      if (bvs.quotient().state().cwiseAbs().maxCoeff() > opts.divergence_bound)
        throw NumericalError("synchronous trajectory diverged at t=" +
                             format_full(bvs.quotient().time()));
      const double f = bvs.renormalize();
      if (w >= align_windows)
        rates.push_back(std::log(f) / (renorm_steps * opts.dt));
    }
    const double mean =
        std::accumulate(rates.begin(), rates.end(), 0.0) / rates.size();
    double var = 0.0;
    for (double r : rates) var += (r - mean) * (r - mean);
    var /= rates.size() > 1 ? rates.size() - 1 : 1;
    res.lambda = mean;
    res.stderr_ = std::sqrt(var / rates.size());
    res.windows = static_cast<int>(rates.size());
    res.ok = true;
  } catch (const NumericalError& e) {
    res.ok = false;
    res.message = e.what();
  }
  return res;
}

std::vector<ClusterVerdict> cluster_stability(
    const IrrTransform& irr, const Clustering& clustering,
    const std::map<int, double>& block_lambda) {
  std::vector<ClusterVerdict> out;
  const auto cmap = block_cluster_map(irr);
  for (int c = 0; c < clustering.count(); ++c) {
    if (clustering.clusters[c].size() < 2) continue;
    ClusterVerdict v;
    v.cluster = c;
    auto it = cmap.find(c);
    if (it == cmap.end())
      throw ValidationError("cluster has no transverse block");
    double lam = -std::numeric_limits<double>::infinity();
    for (int b : it->second) {
      auto lit = block_lambda.find(b);
      if (lit == block_lambda.end())
        throw ValidationError("missing MLE for block " + std::to_string(b));
      lam = std::max(lam, lit->second);
      v.blocks.push_back(b);
    }
    v.lambda = lam;
    v.stable = lam < 0.0;
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

StabilityPoint evaluate_point(const MultilayerNetwork& net,
                              const Clustering& clustering,
                              const IrrTransform& irr,
                              const ModelRegistry& registry,
                              const SweepParameter& param, double value,
                              const SweepOptions& opts, std::uint64_t seed) {
  StabilityPoint pt;
  pt.value = value;
  try {
    MultilayerNetwork work = net;
    if (param.layer < 0 || param.layer >= work.num_layers())
      throw ValidationError("sweep layer out of range");
    if (param.kind == SweepParameter::Kind::Delay)
      work.layers[param.layer].delay_ms = value;
    else
      work.layers[param.layer].sigma = value;

    const QuotientNetwork q = build_quotient(work, clustering);
    SyncSource sync = prepare_sync(q, registry, opts.dt, opts.transient, seed,
                                   opts.mle.divergence_bound);
    MleOptions mopts = opts.mle;
    mopts.dt = opts.dt;
    mopts.seed = seed + 1;
    std::map<int, double> lambdas;
    for (size_t b = 0; b < irr.blocks.size(); ++b) {
      const VariationalSystem vs = build_variational(q, irr, static_cast<int>(b));
      const BlockMle r = block_mle(vs, sync, mopts);
      pt.block_results.push_back(r);
      if (!r.ok) throw NumericalError("block " + std::to_string(b) + ": " + r.message);
      lambdas[static_cast<int>(b)] = r.lambda;
    }
    pt.verdicts = cluster_stability(irr, clustering, lambdas);
    pt.ok = true;
  } catch (const std::exception& e) {
    pt.ok = false;
    pt.message = e.what();
  }
  return pt;
}

}  // namespace

StabilityReport parameter_sweep(const MultilayerNetwork& net,
                                const Clustering& clustering,
                                const IrrTransform& irr,
                                const ModelRegistry& registry,
                                const SweepParameter& param,
                                const std::vector<double>& values,
                                const SweepOptions& opts) {
  StabilityReport rep;
  rep.parameter = (param.kind == SweepParameter::Kind::Delay ? "delay:" : "sigma:") +
                  std::to_string(param.layer + 1);
  rep.dt = opts.dt;
  rep.transient = opts.transient;
  rep.horizon = opts.mle.horizon;
  rep.renorm_interval = opts.mle.renorm_interval;
  rep.seed = opts.mle.seed;
  rep.intertwined = intertwined_groups(irr, clustering);
  rep.points.resize(values.size());

  int jobs = opts.jobs > 0 ? opts.jobs
                           : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= values.size()) break;
      rep.points[i] =
          evaluate_point(net, clustering, irr, registry, param, values[i], opts,
                         opts.mle.seed + 1000003ull * static_cast<std::uint64_t>(i));
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // stability-edge crossings by linear interpolation between valid grid points
  std::map<int, std::pair<double, double>> last;  // cluster -> (value, lambda)
  for (const StabilityPoint& pt : rep.points) {
    if (!pt.ok) continue;
    for (const ClusterVerdict& v : pt.verdicts) {
      auto it = last.find(v.cluster);
      if (it != last.end()) {
        const auto [v0, l0] = it->second;
        if (l0 != 0.0 && v.lambda != 0.0 && (l0 < 0) != (v.lambda < 0)) {
          EdgeCrossing c;
          c.cluster = v.cluster;
          c.value = v0 + (0.0 - l0) * (pt.value - v0) / (v.lambda - l0);
          c.to_unstable = v.lambda > 0;
          rep.crossings.push_back(c);
        }
      }
      last[v.cluster] = {pt.value, v.lambda};
    }
  }
  return rep;
}

ConcordanceReport verify_by_simulation(const MultilayerNetwork& net,
                                       const Clustering& clustering,
                                       const IrrTransform& irr,
                                       const ModelRegistry& registry,
                                       const std::map<int, double>& block_lambda,
                                       const VerifyOptions& opts) {
  ConcordanceReport rep;
  const QuotientNetwork q = build_quotient(net, clustering);
  SyncSource sync = prepare_sync(q, registry, opts.dt, opts.transient, opts.seed);

  const int n = net.size();
  const int qn = clustering.count();

  // transverse perturbation pattern on the first state component
  std::mt19937_64 rng(opts.seed ^ 0x5bf03635f0a7b2c1ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector pattern = Vector::Zero(n);
  for (size_t b = 0; b < irr.blocks.size(); ++b) {
    if (opts.perturb_block && static_cast<int>(b) != *opts.perturb_block) continue;
    for (int r : irr.blocks[b].rows) {
      const double c = gauss(rng);
      pattern += c * irr.T.row(r).transpose();
    }
  }
  if (pattern.cwiseAbs().maxCoeff() > 0) pattern /= pattern.cwiseAbs().maxCoeff();

  NetworkSystem fullsys(net, registry);
  const auto& assign = clustering.assignment;
  auto qstep = sync.stepper;  // shared; read-only from here
  const double t1 = qstep->time() - opts.dt;
  const double amp = opts.perturbation;
  HistoryFn hist = [qstep, assign, pattern, amp, n](double t) {
    const Matrix qs = qstep->delayed(t);
    Matrix full(qs.rows(), n);
    for (int i = 0; i < n; ++i) full.col(i) = qs.col(assign[i]);
    full.row(0) += amp * pattern.transpose();
    return full;
  };

  DdeStepper st(fullsys, hist, t1, opts.dt);
  const long nsteps = std::lround(opts.horizon / opts.dt);
  const long stride = std::max<long>(1, nsteps / 20000);
  rep.traj.t0 = t1;
  rep.traj.dt = opts.dt * stride;
  rep.traj.num_nodes = n;
  rep.traj.dim = fullsys.dim();
  rep.traj.samples.push_back(st.state());

  // the quotient continues alongside, for the branch-symmetry readout
  DdeStepper qcont = *qstep;
  std::vector<Matrix> qsamples{qcont.state()};

  for (long s = 1; s <= nsteps; ++s) {
    st.step();
    qcont.step();
    if (st.state().cwiseAbs().maxCoeff() > 1e9)
      throw NumericalError("full simulation diverged at t=" +
                           format_full(st.time()));
    if (s % stride == 0) {
      rep.traj.samples.push_back(st.state());
      qsamples.push_back(qcont.state());
    }
  }

  // attractor scale from the simulated window
  double vmin = 1e300, vmax = -1e300;
  for (const Matrix& x : rep.traj.samples) {
    vmin = std::min(vmin, x.row(0).minCoeff());
    vmax = std::max(vmax, x.row(0).maxCoeff());
  }
  const double scale = std::max(vmax - vmin, 1e-2 * std::max(1.0, std::abs(vmax)));

  const SyncErrorReport err = sync_error(rep.traj, clustering);
  const int ns = static_cast<int>(err.times.size());
  const int tail0 = ns - std::max(2, ns / 10);

  const auto cmap = block_cluster_map(irr);
  for (int c = 0; c < qn; ++c) {
    if (clustering.clusters[c].size() < 2) continue;
    // locate this cluster's error series
    size_t ci = 0;
    for (; ci < err.clusters.size(); ++ci)
      if (err.clusters[ci] == clustering.clusters[c]) break;
    const auto& series = err.cluster_error[ci];

    ClusterConcordance cc;
    cc.cluster = c;
    double lam = -std::numeric_limits<double>::infinity();
    for (int b : cmap.at(c)) lam = std::max(lam, block_lambda.at(b));
    cc.lambda = lam;
    cc.predicted_stable = lam < 0.0;

    double e_tail = 0.0;
    for (int s = tail0; s < ns; ++s) e_tail = std::max(e_tail, series[s]);
    if (e_tail <= opts.perturbation * opts.decay_factor)
      cc.observed = SyncOutcome::Decayed;
    else if (e_tail >= opts.growth_scale * scale)
      cc.observed = SyncOutcome::Grew;
    else
      cc.observed = SyncOutcome::Inconclusive;

    cc.concordant = (cc.predicted_stable && cc.observed == SyncOutcome::Decayed) ||
                    (!cc.predicted_stable && cc.observed == SyncOutcome::Grew);
    cc.flagged = std::abs(lam) < opts.flag_floor ||
                 cc.observed == SyncOutcome::Inconclusive;
    rep.clusters.push_back(cc);
  }

  // refined empirical clustering: split each original cluster by pairwise
  // deviation over the tail window
  const double group_thr = opts.group_tol * std::max(1.0, scale);
  for (int c = 0; c < qn; ++c) {
    const auto& members = clustering.clusters[c];
    const int m = static_cast<int>(members.size());
    std::vector<int> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) {
        double dev = 0.0;
        for (int s = tail0; s < ns; ++s)
          dev = std::max(dev, std::abs(rep.traj.samples[s](0, members[a]) -
                                       rep.traj.samples[s](0, members[b])));
        if (dev < group_thr) parent[find(a)] = find(b);
      }
    std::map<int, std::vector<int>> groups;
    for (int a = 0; a < m; ++a) groups[find(a)].push_back(members[a]);
    for (auto& [root, g] : groups) {
      std::sort(g.begin(), g.end());
      rep.empirical_clusters.push_back(g);
    }
  }
  std::sort(rep.empirical_clusters.begin(), rep.empirical_clusters.end());

  // block-predicted refinement: clusters touched by an unstable block split
  std::set<int> split;
  for (size_t b = 0; b < irr.blocks.size(); ++b)
    if (block_lambda.at(static_cast<int>(b)) > 0.0)
      for (int c : irr.blocks[b].clusters) split.insert(c);
  for (int c = 0; c < qn; ++c) {
    const auto& members = clustering.clusters[c];
    if (members.size() >= 2 && !split.count(c)) {
      rep.predicted_clusters.push_back(members);
    } else {
      for (int i : members) rep.predicted_clusters.push_back({i});
    }
  }
  std::sort(rep.predicted_clusters.begin(), rep.predicted_clusters.end());
  rep.refinement_match = rep.empirical_clusters == rep.predicted_clusters;

  // branch symmetry: for clusters split into exactly two branches, distance of
  // the branch mean from the synchronous orbit over the tail, relative to the
  // attractor scale
  rep.branch_symmetry = 0.0;
  for (int c = 0; c < qn; ++c) {
    const auto& members = clustering.clusters[c];
    if (members.size() != 2) continue;
    size_t ci = 0;
    for (; ci < err.clusters.size(); ++ci)
      if (err.clusters[ci] == members) break;
    if (ci == err.clusters.size()) continue;
    if (err.cluster_error[ci][ns - 1] < group_thr) continue;  // did not split
    double worst = 0.0;
    for (int s = tail0; s < ns; ++s) {
      const double mean = 0.5 * (rep.traj.samples[s](0, members[0]) +
                                 rep.traj.samples[s](0, members[1]));
      worst = std::max(worst, std::abs(mean - qsamples[s](0, c)));
    }
    rep.branch_symmetry = std::max(rep.branch_symmetry, worst / scale);
  }
  return rep;
}

double rho1_residual(const MultilayerNetwork& net, const Clustering& clustering,
                     const ModelRegistry& registry, const Trajectory& sync_traj,
                     int samples) {
  if (sync_traj.num_nodes != clustering.count())
    throw ValidationError("rho1_residual expects a quotient trajectory");
  NetworkSystem sys(net, registry);
  const double dmax = net.max_delay();
  const int first = std::max(1, static_cast<int>(std::ceil(dmax / sync_traj.dt)) + 1);
  if (first >= sync_traj.size())
    throw ValidationError("trajectory shorter than the maximum delay");

  auto traj_at = [&](double t) {
    const double s = (t - sync_traj.t0) / sync_traj.dt;
    const int i = std::max(0, std::min(sync_traj.size() - 2,
                                       static_cast<int>(std::floor(s))));
    const double th = s - i;
    return Matrix(sync_traj.samples[i] * (1.0 - th) +
                  sync_traj.samples[i + 1] * th);
  };

  double worst = 0.0;
  const int step = std::max(1, (sync_traj.size() - first) / std::max(1, samples));
  for (int si = first; si < sync_traj.size(); si += step) {
    const double t = sync_traj.time_at(si);
    const Matrix s = sync_traj.samples[si];
    for (int k = 0; k < net.num_layers(); ++k) {
      const SynapseModel& syn =
          registry.synapse_model(net.layers[k].synapse_id);
      const int slot = sys.synapse_state_index(k);
      const Matrix sd = traj_at(t - net.layers[k].delay_ms);
      Vector pre(clustering.count());
      for (int p = 0; p < clustering.count(); ++p)
        pre[p] = syn.pre(sd.col(p), slot);
      for (int c = 0; c < clustering.count(); ++c) {
        const auto& members = clustering.clusters[c];
        if (members.size() < 2) continue;
        const double v = s(0, c);
        double ref = 0.0;
        for (size_t a = 0; a < members.size(); ++a) {
          double sum = 0.0;
          for (int j = 0; j < net.size(); ++j) {
            const double w = net.layers[k].adjacency(members[a], j);
            if (w == 0.0) continue;
            sum += w * (syn.dgain(v) * pre[clustering.assignment[j]] +
                        syn.doffset(v));
          }
          sum *= net.layers[k].sigma;
          if (a == 0)
            ref = sum;
          else
            worst = std::max(worst, std::abs(sum - ref));
        }
      }
    }
  }
  return worst;
}

}  // namespace csyn
