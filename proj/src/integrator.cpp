#include "csyn/integrator.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace csyn {

HistoryFn constant_history(const Matrix& state) {
  return [state](double) { return state; };
}

// --- NetworkSystem -----------------------------------------------------------

NetworkSystem::NetworkSystem(const MultilayerNetwork& net,
                             const ModelRegistry& registry)
    : net_(&net), num_nodes_(net.size()) {
  net.validate(registry);
  node_models_.resize(num_nodes_);
  for (int i = 0; i < num_nodes_; ++i) {
    node_models_[i] = &registry.node_model(net.model_of(i));
    base_dim_ = std::max(base_dim_, node_models_[i]->dim());
  }
  // one state slot per distinct dynamical synapse kind, in layer order
  std::map<std::string, int> slot_of;
  for (const Layer& ly : net.layers) {
    const SynapseModel& syn = registry.synapse_model(ly.synapse_id);
    layer_synapses_.push_back(&syn);
    if (syn.dynamical()) {
      auto [it, fresh] =
          slot_of.try_emplace(ly.synapse_id, static_cast<int>(slot_of.size()));
      if (fresh) slot_synapses_.push_back(&syn);
      layer_state_index_.push_back(base_dim_ + it->second);
    } else {
      layer_state_index_.push_back(-1);
    }
  }
  dim_ = base_dim_ + static_cast<int>(slot_synapses_.size());
  for (const Layer& ly : net.layers)
    layer_row_sums_.push_back(ly.adjacency.rowwise().sum());
}

bool NetworkSystem::component_active(int node, int comp) const {
  return comp < node_models_[node]->dim() || comp >= base_dim_;
}

int NetworkSystem::model_dim(int node) const { return node_models_[node]->dim(); }

void NetworkSystem::rhs(const Matrix& x, const std::vector<const Matrix*>& delayed,
                        const Vector* forcing, Matrix& dx) const {
  dx.setZero(dim_, num_nodes_);
  for (int i = 0; i < num_nodes_; ++i) {
    const int nd = node_models_[i]->dim();
    node_models_[i]->deriv(x.col(i).head(nd), dx.col(i).head(nd));
  }
  // synaptic state dynamics, driven by the node's own potential
  for (size_t s = 0; s < slot_synapses_.size(); ++s) {
    const int row = base_dim_ + static_cast<int>(s);
    for (int i = 0; i < num_nodes_; ++i)
      dx(row, i) = slot_synapses_[s]->state_rate(x(0, i), x(row, i));
  }
  // coupling, layer by layer
  Vector pre(num_nodes_);
  for (int k = 0; k < static_cast<int>(layer_synapses_.size()); ++k) {
    const SynapseModel& syn = *layer_synapses_[k];
    const Matrix& xd = *delayed[k];
    const int slot = layer_state_index_[k];
    for (int j = 0; j < num_nodes_; ++j) pre[j] = syn.pre(xd.col(j), slot);
    const Vector total = net_->layers[k].adjacency * pre;
    const double sigma = net_->layers[k].sigma;
    const Vector& rs = layer_row_sums_[k];
    for (int i = 0; i < num_nodes_; ++i) {
      const double v = x(0, i);
      dx(0, i) += sigma * (syn.gain(v) * total[i] + syn.offset(v) * rs[i]);
    }
  }
  if (forcing) dx.row(0) += forcing->transpose();
}

void NetworkSystem::local_jacobian(int node, const Eigen::Ref<const Vector>& x,
                                   Matrix& jac) const {
  jac.setZero(dim_, dim_);
  const int nd = node_models_[node]->dim();
  node_models_[node]->jacobian(x.head(nd), jac.topLeftCorner(nd, nd));
  for (size_t s = 0; s < slot_synapses_.size(); ++s) {
    const int row = base_dim_ + static_cast<int>(s);
    jac(row, 0) = slot_synapses_[s]->dstate_dv(x[0], x[row]);
    jac(row, row) = slot_synapses_[s]->dstate_ds(x[0], x[row]);
  }
}

Matrix NetworkSystem::typical_state() const {
  Matrix x = Matrix::Zero(dim_, num_nodes_);
  for (int i = 0; i < num_nodes_; ++i) {
    const Vector t = node_models_[i]->typical_state();
    x.col(i).head(t.size()) = t;
  }
  for (size_t s = 0; s < slot_synapses_.size(); ++s)
    x.row(base_dim_ + s).setConstant(slot_synapses_[s]->state_init());
  return x;
}

// --- delay snapping ----------------------------------------------------------

std::vector<double> snap_delays(const MultilayerNetwork& net, double dt) {
  if (!(dt > 0)) throw ValidationError("dt must be positive");
  std::vector<double> out;
  for (int k = 0; k < net.num_layers(); ++k) {
    const double d = net.layers[k].delay_ms;
    if (d == 0.0) {
      out.push_back(0.0);
      continue;
    }
    const long m = std::lround(d / dt);
    if (m < 1)
      throw NumericalError("layer " + std::to_string(k + 1) + " delay " +
                           format_full(d) + " is smaller than the step " +
                           format_full(dt));
    out.push_back(m * dt);
  }
  return out;
}

// --- DdeStepper --------------------------------------------------------------

DdeStepper::DdeStepper(const NetworkSystem& sys, HistoryFn history, double t0,
                       double dt, ForcingFn forcing)
    : sys_(&sys),
      history_(std::move(history)),
      forcing_(std::move(forcing)),
      t0_(t0),
      dt_(dt) {
  delays_ = snap_delays(sys.network(), dt);
  for (double d : delays_) max_delay_ = std::max(max_delay_, d);
  const long m = std::lround(max_delay_ / dt_);
  ring_cap_ = static_cast<int>(m) + 4;
  ring_x_.resize(ring_cap_);
  ring_f_.resize(ring_cap_);
  x_ = history_(t0_);
  if (x_.rows() != sys.dim() || x_.cols() != sys.nodes())
    throw ValidationError("history returns " + std::to_string(x_.rows()) + "x" +
                          std::to_string(x_.cols()) + ", system needs " +
                          std::to_string(sys.dim()) + "x" +
                          std::to_string(sys.nodes()));
}

Matrix DdeStepper::read(double t) const {
  const double eps = 1e-6 * dt_;
  if (t <= t0_ + eps) {
    if (t > t0_ - eps && steps_done_ == 0) return x_;
    return history_(t);
  }
  const double s = (t - t0_) / dt_;
  const long idx = std::lround(s);
  if (std::abs(s - static_cast<double>(idx)) < 1e-6) {
    if (idx == steps_done_) return x_;
    if (idx > ring_newest_ || idx < ring_newest_ - ring_cap_ + 1)
      throw NumericalError("delayed read at t=" + format_full(t) +
                           " outside the stored horizon");
    return ring_x_[idx % ring_cap_];
  }
  const long i = static_cast<long>(std::floor(s));
  if (i < 0 || i + 1 > ring_newest_ || i < ring_newest_ - ring_cap_ + 1)
    throw NumericalError("interpolated read at t=" + format_full(t) +
                         " outside the stored horizon");
  const double th = s - i;
  const double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
  const double h10 = th * (1 - th) * (1 - th);
  const double h01 = th * th * (3 - 2 * th);
  const double h11 = th * th * (th - 1);
  return h00 * ring_x_[i % ring_cap_] + (h10 * dt_) * ring_f_[i % ring_cap_] +
         h01 * ring_x_[(i + 1) % ring_cap_] +
         (h11 * dt_) * ring_f_[(i + 1) % ring_cap_];
}

Matrix DdeStepper::delayed(double t) const { return read(t); }

void DdeStepper::step() { step(nullptr); }

void DdeStepper::step(const StageObserver& observer) {
  const double t = time();
  const int nl = static_cast<int>(delays_.size());
  std::vector<Matrix> dstore(nl);
  std::vector<const Matrix*> dptr(nl);
  Vector force;
  const Vector* fptr = nullptr;
  auto forcing_at = [&](double ts) -> const Vector* {
    if (!forcing_) return nullptr;
    force.setZero(sys_->nodes());
    forcing_(ts, force);
    return &force;
  };

  // stage 1: delayed reads land on grid points
  for (int k = 0; k < nl; ++k) {
    if (delays_[k] == 0.0) {
      dptr[k] = &x_;
    } else {
      dstore[k] = read(t - delays_[k]);
      dptr[k] = &dstore[k];
    }
  }
  fptr = forcing_at(t);
  sys_->rhs(x_, dptr, fptr, k1_);
  if (observer) observer(0, t, x_, dptr);

  // store (state, right-derivative) for this grid point
  ring_newest_ = steps_done_;
  ring_x_[steps_done_ % ring_cap_] = x_;
  ring_f_[steps_done_ % ring_cap_] = k1_;

  // stages 2 and 3 share the half-step delayed reads
  const double th = t + 0.5 * dt_;
  std::vector<Matrix> dhalf(nl);
  for (int k = 0; k < nl; ++k)
    if (delays_[k] != 0.0) dhalf[k] = read(th - delays_[k]);

  xs_ = x_ + (0.5 * dt_) * k1_;
  for (int k = 0; k < nl; ++k) dptr[k] = delays_[k] == 0.0 ? &xs_ : &dhalf[k];
  fptr = forcing_at(th);
  sys_->rhs(xs_, dptr, fptr, k2_);
  if (observer) observer(1, th, xs_, dptr);

  xs_ = x_ + (0.5 * dt_) * k2_;
  for (int k = 0; k < nl; ++k) dptr[k] = delays_[k] == 0.0 ? &xs_ : &dhalf[k];
  sys_->rhs(xs_, dptr, fptr, k3_);
  if (observer) observer(2, th, xs_, dptr);

  // stage 4: grid-point delayed reads again
  const double te = t + dt_;
  xs_ = x_ + dt_ * k3_;
  for (int k = 0; k < nl; ++k) {
    if (delays_[k] == 0.0) {
      dptr[k] = &xs_;
    } else {
      dstore[k] = read(te - delays_[k]);
      dptr[k] = &dstore[k];
    }
  }
  fptr = forcing_at(te);
  sys_->rhs(xs_, dptr, fptr, k4_);
  if (observer) observer(3, te, xs_, dptr);

  x_ += (dt_ / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  ++steps_done_;

  if (!x_.allFinite())
    throw NumericalError("state diverged at t=" + format_full(time()));
}

void DdeStepper::advance(double duration) {
  const long n = std::lround(duration / dt_);
  for (long s = 0; s < n; ++s) step();
}

// --- integrate / lift / pulse / sync error -----------------------------------

Trajectory integrate_dde(const NetworkSystem& sys, HistoryFn history,
                         const IntegrateOptions& opts) {
  if (!(opts.dt > 0)) throw ValidationError("dt must be positive");
  DdeStepper st(sys, std::move(history), 0.0, opts.dt, opts.forcing);
  Trajectory traj;
  traj.t0 = 0.0;
  traj.dt = opts.dt * opts.record_stride;
  traj.num_nodes = sys.nodes();
  traj.dim = sys.dim();
  traj.samples.push_back(st.state());
  const long nsteps = std::lround(opts.t_end / opts.dt);
  for (long s = 1; s <= nsteps; ++s) {
    st.step();
    if (st.state().cwiseAbs().maxCoeff() > opts.divergence_bound)
      throw NumericalError("state diverged at t=" + format_full(st.time()));
    if (s % opts.record_stride == 0) traj.samples.push_back(st.state());
  }
  return traj;
}

PulseResponse pulse_response(const NetworkSystem& sys, const PulseSpec& pulse,
                             const PulseOptions& opts) {
  if (pulse.target_node < 0 || pulse.target_node >= sys.nodes())
    throw ValidationError("pulse target node out of range");

  // settle to the pre-pulse equilibrium
  DdeStepper settle(sys, constant_history(sys.typical_state()), 0.0, opts.dt);
  settle.advance(opts.settle_time);
  const Matrix baseline = settle.state();

  // align onset/offset to the step grid
  const double t_on = std::lround(pulse.t_on / opts.dt) * opts.dt;
  const long n_dur = std::max<long>(1, std::lround(pulse.duration / opts.dt));
  const double t_off = t_on + n_dur * opts.dt;
  const int target = pulse.target_node;
  const double amp = pulse.amplitude;
  ForcingFn forcing = [t_on, t_off, target, amp](double t, Vector& f) {
    if (t >= t_on && t < t_off) f[target] += amp;
  };

  PulseResponse out;
  out.baseline = baseline;
  DdeStepper st(sys, constant_history(baseline), 0.0, opts.dt, forcing);
  out.traj.t0 = 0.0;
  out.traj.dt = opts.dt;
  out.traj.num_nodes = sys.nodes();
  out.traj.dim = sys.dim();
  const long nsteps = std::lround((t_off + opts.horizon) / opts.dt);
  out.traj.samples.reserve(nsteps + 1);
  out.traj.samples.push_back(st.state());
  for (long s = 1; s <= nsteps; ++s) {
    st.step();
    out.traj.samples.push_back(st.state());
  }

  // per-node exponential decay fit after pulse offset
  const int i_off = static_cast<int>(std::lround(t_off / opts.dt));
  for (int i = 0; i < sys.nodes(); ++i) {
    DecayFit fit;
    fit.node = i;
    double peak = 0.0;
    int i_peak = i_off;
    for (int s = i_off; s < out.traj.size(); ++s) {
      const double dev = std::abs(out.traj.samples[s](0, i) - baseline(0, i));
      if (dev > peak) {
        peak = dev;
        i_peak = s;
      }
    }
    fit.peak_dev = peak;
    if (peak > 1e-12) {
      const double floor = peak * opts.fit_floor_rel;
      double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
      int m = 0;
      for (int s = i_peak; s < out.traj.size(); ++s) {
        const double dev = std::abs(out.traj.samples[s](0, i) - baseline(0, i));
        if (dev < floor) break;
        const double tx = out.traj.time_at(s), ty = std::log(dev);
        sx += tx;
        sy += ty;
        sxx += tx * tx;
        sxy += tx * ty;
        syy += ty * ty;
        ++m;
      }
      if (m >= 10) {
        const double det = m * sxx - sx * sx;
        if (det > 0) {
          const double slope = (m * sxy - sx * sy) / det;
          const double ssr = syy - sy * sy / m - slope * (sxy - sx * sy / m);
          const double sst = syy - sy * sy / m;
          fit.r2 = sst > 0 ? 1.0 - ssr / sst : 0.0;
          if (slope < 0) {
            fit.tau = -1.0 / slope;
            fit.valid = true;
          }
        }
      }
    }
    out.fits.push_back(fit);
  }
  return out;
}

SyncErrorReport sync_error(const Trajectory& traj, const Clustering& clustering,
                           double window_start) {
  if (traj.num_nodes != clustering.num_nodes())
    throw ValidationError("sync_error: trajectory does not cover all nodes");
  SyncErrorReport rep;
  rep.clusters = nontrivial_clusters(clustering);
  rep.cluster_error.resize(rep.clusters.size());
  for (int s = 0; s < traj.size(); ++s) {
    rep.times.push_back(traj.time_at(s));
    const Matrix& x = traj.samples[s];
    for (size_t c = 0; c < rep.clusters.size(); ++c) {
      const auto& members = rep.clusters[c];
      double worst = 0.0;
      for (size_t a = 0; a < members.size(); ++a)
        for (size_t b = a + 1; b < members.size(); ++b)
          worst = std::max(worst,
                           std::abs(x(0, members[a]) - x(0, members[b])));
      rep.cluster_error[c].push_back(worst);
    }
  }
  // Pearson correlation of the first component over the analysis window
  const int n = traj.num_nodes;
  int s0 = 0;
  while (s0 < traj.size() && traj.time_at(s0) < window_start) ++s0;
  const int m = traj.size() - s0;
  rep.correlation = Matrix::Identity(n, n);
  if (m >= 2) {
    Matrix v(m, n);
    for (int s = 0; s < m; ++s)
      for (int i = 0; i < n; ++i) v(s, i) = traj.samples[s0 + s](0, i);
    const Eigen::RowVectorXd mean = v.colwise().mean();
    v.rowwise() -= mean;
    const Eigen::RowVectorXd norm = v.colwise().norm();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double den = norm[i] * norm[j];
        rep.correlation(i, j) = den > 0 ? v.col(i).dot(v.col(j)) / den : 0.0;
      }
  }
  return rep;
}

}  // namespace csyn
