#include <doctest.h>

#include <cmath>

#include "csyn/integrator.hpp"
#include "csyn/quotient.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace csyn;

namespace {

/// dx/dt = -x(t-1) realized as a single "rate" node with a delayed self-loop:
/// node model with zero vector field, rate_linear synapse, sigma = -1.
class ZeroField final : public NodeModel {
 public:
  std::string name() const override { return "zero1"; }
  int dim() const override { return 1; }
  void deriv(const Eigen::Ref<const Vector>&,
             Eigen::Ref<Vector> dx) const override {
    dx[0] = 0.0;
  }
  void jacobian(const Eigen::Ref<const Vector>&,
                Eigen::Ref<Matrix> j) const override {
    j(0, 0) = 0.0;
  }
};

ModelRegistry test_registry() {
  ModelRegistry reg = builtin_models();
  reg.add_node_model(std::make_shared<ZeroField>());
  return reg;
}

MultilayerNetwork delayed_decay_net() {
  MultilayerNetwork net;
  net.name = "delayed_decay";
  net.node_types = {1};
  net.node_models[1] = "zero1";
  Layer l;
  l.adjacency = Matrix::Constant(1, 1, 1.0);
  l.sigma = -1.0;
  l.delay_ms = 1.0;
  l.synapse_id = "rate_linear";
  l.allow_self_coupling = true;
  net.layers = {l};
  return net;
}

double max_error_vs_exact(const Trajectory& traj) {
  const oracle::DelayedDecayExact exact;
  double worst = 0.0;
  for (int s = 0; s < traj.size(); ++s)
    worst = std::max(worst, std::abs(traj.samples[s](0, 0) - exact(traj.time_at(s))));
  return worst;
}

}  // namespace

TEST_CASE("delayed decay matches the method-of-steps solution") {
  const ModelRegistry reg = test_registry();
  const auto net = delayed_decay_net();
  NetworkSystem sys(net, reg);
  IntegrateOptions opts;
  opts.dt = 1e-3;
  opts.t_end = 5.0;
  const Trajectory traj =
      integrate_dde(sys, constant_history(Matrix::Constant(1, 1, 1.0)), opts);

  const oracle::DelayedDecayExact exact;
  // frozen analytic landmarks
  CHECK(exact(1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(exact(1.5) == doctest::Approx(-0.375).epsilon(1e-15));

  const int i15 = static_cast<int>(std::lround(1.5 / opts.dt));
  CHECK(traj.samples[i15](0, 0) == doctest::Approx(-0.375).epsilon(1e-9));
  CHECK(max_error_vs_exact(traj) <= 1e-6);
}

TEST_CASE("integrator converges at fourth order away from breaks") {
  const ModelRegistry reg = test_registry();
  const auto net = delayed_decay_net();
  NetworkSystem sys(net, reg);
  const oracle::DelayedDecayExact exact;

  // compare at t = 4.25 (inside a smooth piece, well past the breaks)
  auto error_at = [&](double dt) {
    IntegrateOptions opts;
    opts.dt = dt;
    opts.t_end = 4.25;
    const Trajectory traj =
        integrate_dde(sys, constant_history(Matrix::Constant(1, 1, 1.0)), opts);
    return std::abs(traj.samples[traj.size() - 1](0, 0) - exact(4.25));
  };
  const double e1 = error_at(1.0 / 40.0);
  const double e2 = error_at(1.0 / 80.0);
  const double order = std::log2(e1 / e2);
  CHECK(order >= 3.5);
}

TEST_CASE("zero-coupling identical nodes stay identical") {
  const ModelRegistry reg = builtin_models();
  MultilayerNetwork net = fixtures::pair_network("fhn", "electrical", 0.0);
  NetworkSystem sys(net, reg);
  Matrix x0(2, 2);
  x0.col(0) << 1.0, 0.3;
  x0.col(1) << 1.0, 0.3;
  IntegrateOptions opts;
  opts.dt = 0.01;
  opts.t_end = 50.0;
  const Trajectory traj = integrate_dde(sys, constant_history(x0), opts);
  for (int s = 0; s < traj.size(); ++s)
    CHECK((traj.samples[s].col(0) - traj.samples[s].col(1)).cwiseAbs().maxCoeff() ==
          0.0);
}

TEST_CASE("equilibrium stays at equilibrium") {
  const ModelRegistry reg = builtin_models();
  MultilayerNetwork net = fixtures::pair_network("rate_ei", "rate_linear", 0.0);
  NetworkSystem sys(net, reg);
  // rate_ei equilibrium: solve the 2x2 linear system for drive = 1
  // (1 - w_ee) re + w_ei ri = 1 ; -w_ie re + (1 + w_ii) ri = 0
  Matrix m(2, 2);
  m << 1.0 - 1.5, 1.2, -1.0, 1.5;
  Vector b(2);
  b << 1.0, 0.0;
  const Vector eq = m.colPivHouseholderQr().solve(b);
  Matrix x0(2, 2);
  x0.col(0) = eq;
  x0.col(1) = eq;
  IntegrateOptions opts;
  opts.dt = 0.02;
  opts.t_end = 10.0;
  const Trajectory traj = integrate_dde(sys, constant_history(x0), opts);
  double drift = 0.0;
  for (int s = 0; s < traj.size(); ++s)
    drift = std::max(drift,
                     (traj.samples[s].col(0) - eq).cwiseAbs().maxCoeff());
  CHECK(drift <= 1e-11);  // 1e-12 per unit time over 10 time units
}

TEST_CASE("delay smaller than dt is a hard error") {
  const ModelRegistry reg = test_registry();
  auto net = delayed_decay_net();
  net.layers[0].delay_ms = 0.01;
  CHECK_THROWS_AS(snap_delays(net, 0.05), NumericalError);
  // and delays snap to the nearest step multiple
  net.layers[0].delay_ms = 0.9998;
  const auto snapped = snap_delays(net, 1e-3);
  CHECK(snapped[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reading history older than the horizon is a hard error") {
  const ModelRegistry reg = test_registry();
  const auto net = delayed_decay_net();
  NetworkSystem sys(net, reg);
  DdeStepper st(sys, constant_history(Matrix::Constant(1, 1, 1.0)), 0.0, 0.1);
  for (int i = 0; i < 100; ++i) st.step();
  CHECK_NOTHROW(st.delayed(st.time() - 1.0));
  CHECK_THROWS_AS(st.delayed(st.time() - 3.0), NumericalError);
}

TEST_CASE("divergence aborts with a time stamp") {
  // dx/dt = +x(t-1): grows without bound
  const ModelRegistry reg = test_registry();
  auto net = delayed_decay_net();
  net.layers[0].sigma = 5.0;
  NetworkSystem sys(net, reg);
  IntegrateOptions opts;
  opts.dt = 0.01;
  opts.t_end = 2000.0;
  opts.divergence_bound = 1e6;
  CHECK_THROWS_WITH_AS(
      integrate_dde(sys, constant_history(Matrix::Constant(1, 1, 1.0)), opts),
      doctest::Contains("diverged at t="), NumericalError);
}

TEST_CASE("manifold invariance on the fig1 fixture") {
  const ModelRegistry reg = builtin_models();
  const auto net = fixtures::fig1_network();
  const Clustering cl = coarsest_equitable_partition(net);
  const QuotientNetwork q = build_quotient(net, cl);

  NetworkSystem qsys(q.net, reg);
  NetworkSystem fsys(net, reg);
  Matrix q0 = qsys.typical_state();
  for (int c = 0; c < q0.cols(); ++c) q0(0, c) += 0.1 * c;  // distinct clusters

  IntegrateOptions opts;
  opts.dt = 0.01;
  opts.t_end = 100.0;
  const Trajectory qt = integrate_dde(qsys, constant_history(q0), opts);
  const Trajectory lifted = lift_trajectory(qt, cl);

  Matrix f0(fsys.dim(), net.size());
  for (int i = 0; i < net.size(); ++i) f0.col(i) = q0.col(cl.assignment[i]);
  const Trajectory ft = integrate_dde(fsys, constant_history(f0), opts);

  REQUIRE(ft.size() == lifted.size());
  double worst = 0.0;
  for (int s = 0; s < ft.size(); ++s)
    worst = std::max(worst,
                     (ft.samples[s] - lifted.samples[s]).cwiseAbs().maxCoeff());
  CHECK(worst <= 1e-6);
}

TEST_CASE("dynamical synapse network integrates and stays finite") {
  const ModelRegistry reg = builtin_models();
  MultilayerNetwork net = fixtures::pair_network("fhn", "chem_dynamical", 0.05, 2.0);
  NetworkSystem sys(net, reg);
  CHECK(sys.dim() == 3);  // fhn (2) + one synapse slot
  CHECK(sys.synapse_state_index(0) == 2);
  IntegrateOptions opts;
  opts.dt = 0.01;
  opts.t_end = 100.0;
  const Trajectory traj = integrate_dde(sys, constant_history(sys.typical_state()), opts);
  CHECK(traj.samples.back().allFinite());
  // synapse gate stays in [0, 1]
  for (int s = 0; s < traj.size(); s += 100) {
    CHECK(traj.samples[s](2, 0) >= -1e-9);
    CHECK(traj.samples[s](2, 0) <= 1.0 + 1e-9);
  }
}

TEST_CASE("pulse with zero amplitude leaves the equilibrium flat") {
  const ModelRegistry reg = builtin_models();
  MultilayerNetwork net = fixtures::pair_network("rate_ei", "rate_linear", 0.02);
  NetworkSystem sys(net, reg);
  PulseSpec spec;
  spec.target_node = 0;
  spec.amplitude = 0.0;
  spec.t_on = 10.0;
  spec.duration = 5.0;
  PulseOptions po;
  po.dt = 0.02;
  po.settle_time = 400.0;
  po.horizon = 50.0;
  const PulseResponse resp = pulse_response(sys, spec, po);
  double dev = 0.0;
  for (const auto& s : resp.traj.samples)
    dev = std::max(dev, (s - resp.baseline).cwiseAbs().maxCoeff());
  CHECK(dev <= 1e-8);
}

TEST_CASE("feed-forward chain: slower node has the larger decay constant") {
  // node 1 (fast) drives node 2 (slow, different tau_e via custom model)
  ModelRegistry reg = builtin_models();
  reg.add_node_model(make_rate_ei("rate_slow", 60.0, 10.0, 1.5, 1.2, 1.0, 0.5, 1.0));
  MultilayerNetwork net;
  net.name = "chain";
  net.node_types = {1, 2};
  net.node_models[1] = "rate_ei";
  net.node_models[2] = "rate_slow";
  Layer l;
  l.adjacency = Matrix::Zero(2, 2);
  l.adjacency(1, 0) = 1.0;  // 1 -> 2
  l.sigma = 0.05;
  l.synapse_id = "rate_linear";
  net.layers = {l};
  NetworkSystem sys(net, reg);

  PulseSpec spec;
  spec.target_node = 0;
  spec.amplitude = 0.5;
  spec.t_on = 20.0;
  spec.duration = 10.0;
  PulseOptions po;
  po.dt = 0.05;
  po.settle_time = 2000.0;
  po.horizon = 1500.0;
  const PulseResponse resp = pulse_response(sys, spec, po);
  REQUIRE(resp.fits.size() == 2);
  CHECK(resp.fits[0].valid);
  CHECK(resp.fits[1].valid);
  CHECK(resp.fits[1].tau > resp.fits[0].tau);
}

TEST_CASE("sync_error: lifted trajectory has zero error and unit correlation") {
  Trajectory qt;
  qt.t0 = 0.0;
  qt.dt = 0.1;
  qt.num_nodes = 2;
  qt.dim = 1;
  for (int s = 0; s < 50; ++s) {
    Matrix m(1, 2);
    m << std::sin(0.3 * s), std::cos(0.2 * s);
    qt.samples.push_back(m);
  }
  const Clustering cl = clustering_from_assignment({0, 0, 1, 1});
  const Trajectory full = lift_trajectory(qt, cl);
  const SyncErrorReport rep = sync_error(full, cl);
  REQUIRE(rep.cluster_error.size() == 2);
  for (const auto& series : rep.cluster_error)
    for (double e : series) CHECK(e == 0.0);
  CHECK(rep.correlation(0, 1) == doctest::Approx(1.0));
  CHECK(rep.correlation(2, 3) == doctest::Approx(1.0));
}

TEST_CASE("sync_error: phase-lagged sinusoids decorrelate") {
  Trajectory traj;
  traj.t0 = 0.0;
  traj.dt = 0.05;
  traj.num_nodes = 2;
  traj.dim = 1;
  for (int s = 0; s < 400; ++s) {
    Matrix m(1, 2);
    const double t = s * traj.dt;
    m << std::sin(t), std::sin(t + 2.0);
    traj.samples.push_back(m);
  }
  const Clustering cl = clustering_from_assignment({0, 0});
  const SyncErrorReport rep = sync_error(traj, cl);
  CHECK(rep.correlation(0, 1) < 1.0 - 1e-3);
  double emax = 0.0;
  for (double e : rep.cluster_error[0]) emax = std::max(emax, e);
  CHECK(emax > 0.5);
}
