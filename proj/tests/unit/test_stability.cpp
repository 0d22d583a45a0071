#include <doctest.h>

#include <cmath>
#include <map>

#include "csyn/stability.hpp"
#include "support/fixtures.hpp"

using namespace csyn;

namespace {

const ModelRegistry& registry() {
  static const ModelRegistry reg = builtin_models();
  return reg;
}

/// MLE of one block of a network, with the boilerplate folded away.
BlockMle mle_of(const MultilayerNetwork& net, const Clustering& cl,
                const IrrTransform& irr, int block, const MleOptions& mo,
                double transient = 500.0) {
  const QuotientNetwork q = build_quotient(net, cl);
  const SyncSource sync = prepare_sync(q, registry(), mo.dt, transient, mo.seed);
  const VariationalSystem vs = build_variational(q, irr, block);
  return block_mle(vs, sync, mo);
}

}  // namespace

TEST_CASE("cluster_stability applies the max rule over associated blocks") {
  const auto net = fixtures::fig1_network();
  const Clustering cl = coarsest_equitable_partition(net);
  const IrrTransform irr = build_transform(net, cl);

  // name blocks by their cluster support
  int red = -1, blue = -1, yellow = -1, multi = -1;
  for (size_t b = 0; b < irr.blocks.size(); ++b) {
    const auto& cs = irr.blocks[b].clusters;
    if (cs == std::set<int>{0}) red = static_cast<int>(b);
    if (cs == std::set<int>{2}) blue = static_cast<int>(b);
    if (cs == std::set<int>{3}) yellow = static_cast<int>(b);
    if (cs.size() == 3) multi = static_cast<int>(b);
  }
  REQUIRE(red >= 0);
  REQUIRE(blue >= 0);
  REQUIRE(yellow >= 0);
  REQUIRE(multi >= 0);

  // lambda_1 = blue, lambda_2 = multi, lambda_3 = red, lambda_4 = yellow
  auto verdicts = [&](double l1, double l2, double l3, double l4) {
    std::map<int, double> lam{{blue, l1}, {multi, l2}, {red, l3}, {yellow, l4}};
    std::map<int, ClusterVerdict> out;
    for (const ClusterVerdict& v : cluster_stability(irr, cl, lam))
      out[v.cluster] = v;
    return out;
  };

  // isolated desynchronization of the red cluster
  auto v = verdicts(-1.0, -2.0, +1.0, -3.0);
  CHECK(v[0].lambda == doctest::Approx(1.0));   // C1 = max(l2, l3) = +1
  CHECK_FALSE(v[0].stable);
  CHECK(v[1].lambda == doctest::Approx(-2.0));  // C2 = l2
  CHECK(v[1].stable);
  CHECK(v[2].lambda == doctest::Approx(-1.0));  // C3 = max(l1, l2)
  CHECK(v[2].stable);
  CHECK(v[3].lambda == doctest::Approx(-3.0));  // C4 = l4
  CHECK(v[3].stable);

  // the multi block going unstable takes C1, C2, C3 down together
  v = verdicts(-1.0, +2.0, -1.0, -3.0);
  CHECK_FALSE(v[0].stable);
  CHECK_FALSE(v[1].stable);
  CHECK_FALSE(v[2].stable);
  CHECK(v[3].stable);

  // all negative: all stable
  v = verdicts(-1.0, -2.0, -1.0, -3.0);
  for (auto& [c, cv] : v) CHECK(cv.stable);

  // missing block MLE is an error
  std::map<int, double> missing{{red, -1.0}};
  CHECK_THROWS_AS(cluster_stability(irr, cl, missing), ValidationError);
}

TEST_CASE("input-free periodic cluster has a neutral exponent") {
  // pair of fhn oscillators with no inputs at all, plus a driven singleton to
  // keep the network connected
  MultilayerNetwork net;
  net.name = "free_pair";
  net.node_types = {1, 1, 1};
  net.node_models[1] = "fhn";
  Layer l;
  l.adjacency = Matrix::Zero(3, 3);
  l.adjacency(2, 0) = 1.0;  // pair drives the singleton, not vice versa
  l.adjacency(2, 1) = 1.0;
  l.sigma = 0.1;
  l.synapse_id = "chem_sigmoid_exc";
  net.layers = {l};
  const Clustering cl = coarsest_equitable_partition(net);
  REQUIRE(nontrivial_clusters(cl).size() == 1);
  const IrrTransform irr = build_transform(net, cl);
  REQUIRE(irr.blocks.size() == 1);

  MleOptions mo;
  mo.dt = 0.02;
  mo.horizon = 1500.0;
  mo.renorm_interval = 1.0;
  mo.align = 200.0;
  mo.seed = 7;
  const BlockMle r = mle_of(net, cl, irr, 0, mo, 600.0);
  REQUIRE(r.ok);
  CHECK(std::abs(r.lambda) <= 0.01);
}

TEST_CASE("strongly coupled fhn pair: negative exponent, sync confirmed") {
  const auto net = fixtures::pair_network("fhn", "electrical", 0.5);
  const Clustering cl = coarsest_equitable_partition(net);
  const IrrTransform irr = build_transform(net, cl);
  MleOptions mo;
  mo.dt = 0.02;
  mo.horizon = 800.0;
  mo.align = 100.0;
  mo.seed = 3;
  const BlockMle r = mle_of(net, cl, irr, 0, mo);
  REQUIRE(r.ok);
  CHECK(r.lambda < -0.1);

  std::map<int, double> lam{{0, r.lambda}};
  VerifyOptions vo;
  vo.dt = 0.02;
  vo.transient = 500.0;
  vo.horizon = 400.0;
  vo.perturbation = 1e-6;
  const ConcordanceReport rep =
      verify_by_simulation(net, cl, irr, registry(), lam, vo);
  REQUIRE(rep.clusters.size() == 1);
  CHECK(rep.clusters[0].observed == SyncOutcome::Decayed);
  CHECK(rep.clusters[0].concordant);
  CHECK(rep.refinement_match);  // cluster stays whole
}

TEST_CASE("uncoupled pair matches the single-node variational estimate") {
  const auto net = fixtures::pair_network("fhn", "electrical", 0.0);
  const Clustering cl = clustering_from_assignment({0, 0});
  const IrrTransform irr = build_transform(net, cl);
  MleOptions mo;
  mo.dt = 0.02;
  mo.horizon = 1000.0;
  mo.align = 200.0;
  mo.seed = 11;
  const BlockMle pair = mle_of(net, cl, irr, 0, mo, 600.0);
  REQUIRE(pair.ok);

  // single isolated node, same machinery: its own largest exponent
  MultilayerNetwork solo;
  solo.name = "solo";
  solo.node_types = {1, 1};
  solo.node_models[1] = "fhn";
  Layer l;
  l.adjacency = Matrix::Zero(2, 2);
  l.synapse_id = "electrical";
  solo.layers = {l};
  const Clustering scl = clustering_from_assignment({0, 0});
  const IrrTransform sirr = build_transform(solo, scl);
  const BlockMle single = mle_of(solo, scl, sirr, 0, mo, 600.0);
  REQUIRE(single.ok);
  CHECK(std::abs(pair.lambda - single.lambda) <=
        0.02 + 3.0 * (pair.stderr_ + single.stderr_));
}

TEST_CASE("MLE invariant under the transverse basis seed") {
  const auto net = fixtures::fig1_network("fhn", "electrical", "chem_sigmoid_exc",
                                          0.08, 0.03, 4.0);
  const Clustering cl = coarsest_equitable_partition(net);
  const IrrTransform ia = build_transform(net, cl, {.seed = 1});
  const IrrTransform ib = build_transform(net, cl, {.seed = 99});

  MleOptions mo;
  mo.dt = 0.02;
  mo.horizon = 600.0;
  mo.align = 100.0;
  mo.seed = 5;

  // compare the 4x4 multi-block under the two bases
  int ba = -1, bb = -1;
  for (size_t b = 0; b < ia.blocks.size(); ++b)
    if (ia.blocks[b].clusters.size() == 3) ba = static_cast<int>(b);
  for (size_t b = 0; b < ib.blocks.size(); ++b)
    if (ib.blocks[b].clusters.size() == 3) bb = static_cast<int>(b);
  REQUIRE(ba >= 0);
  REQUIRE(bb >= 0);
  const BlockMle ra = mle_of(net, cl, ia, ba, mo);
  const BlockMle rb = mle_of(net, cl, ib, bb, mo);
  REQUIRE(ra.ok);
  REQUIRE(rb.ok);
  CHECK(std::abs(ra.lambda - rb.lambda) <=
        0.01 + 3.0 * (ra.stderr_ + rb.stderr_));
}

TEST_CASE("time rescaling scales the exponent by 1/c") {
  // rate pair with delay; scaled copy has all rates doubled, delays halved
  ModelRegistry reg = builtin_models();
  reg.add_node_model(make_rate_ei("rate_fast", 10.0, 5.0, 1.5, 1.2, 1.0, 0.5, 1.0));
  auto run = [&](const std::string& model, double delay, double dt,
                 double sigma) {
    MultilayerNetwork net = fixtures::pair_network(model, "rate_linear", sigma, delay);
    const Clustering cl = clustering_from_assignment({0, 0});
    const IrrTransform irr = build_transform(net, cl);
    const QuotientNetwork q = build_quotient(net, cl);
    MleOptions mo;
    mo.dt = dt;
    mo.horizon = 3000.0 * dt / 0.02;
    mo.renorm_interval = 50.0 * dt;
    mo.align = 100.0 * dt / 0.02 * 0.2;
    mo.seed = 9;
    const SyncSource sync = prepare_sync(q, reg, dt, 400.0 * dt / 0.02, 1);
    return block_mle(build_variational(q, irr, 0), sync, mo);
  };
  // rate_fast has tau_e, tau_i halved vs rate_ei: same flow at t' = t/2
  const BlockMle slow = run("rate_ei", 4.0, 0.02, 0.05);
  const BlockMle fast = run("rate_fast", 2.0, 0.01, 0.05);
  REQUIRE(slow.ok);
  REQUIRE(fast.ok);
  CHECK(fast.lambda == doctest::Approx(2.0 * slow.lambda)
                           .epsilon(0.05)
                           .scale(std::abs(slow.lambda)));
}

TEST_CASE("rho1 agrees across members of each cluster") {
  const auto net = fixtures::fig1_network();
  const Clustering cl = coarsest_equitable_partition(net);
  const QuotientNetwork q = build_quotient(net, cl);
  NetworkSystem qsys(q.net, registry());
  IntegrateOptions io;
  io.dt = 0.02;
  io.t_end = 100.0;
  Matrix x0 = qsys.typical_state();
  for (int c = 0; c < x0.cols(); ++c) x0(0, c) += 0.05 * c;
  const Trajectory qt = integrate_dde(qsys, constant_history(x0), io);
  CHECK(rho1_residual(net, cl, registry(), qt) <= 1e-9);
}

TEST_CASE("sweep recomputes per point, reports crossings and survives failures") {
  // driver + pair with delayed sigmoidal input: lambda moves with the delay
  const auto net = fixtures::driven_pair(1.0, 0.3, 0.15, 1.0);
  const Clustering cl = coarsest_equitable_partition(net);
  REQUIRE(nontrivial_clusters(cl).size() == 1);
  const IrrTransform irr = build_transform(net, cl);

  SweepOptions so;
  so.dt = 0.05;
  so.transient = 300.0;
  so.mle.dt = 0.05;
  so.mle.horizon = 300.0;
  so.mle.align = 50.0;
  so.mle.seed = 2;
  so.jobs = 1;
  const std::vector<double> values{1.0, 4.0, 8.0};
  const StabilityReport rep =
      parameter_sweep(net, cl, irr, registry(), {SweepParameter::Kind::Delay, 0},
                      values, so);
  REQUIRE(rep.points.size() == 3);
  for (const auto& pt : rep.points) {
    REQUIRE(pt.ok);
    REQUIRE(pt.verdicts.size() == 1);
  }
  // single-point sweep equals the single-point analysis
  const StabilityReport one =
      parameter_sweep(net, cl, irr, registry(), {SweepParameter::Kind::Delay, 0},
                      {4.0}, so);
  REQUIRE(one.points.size() == 1);
  CHECK(one.points[0].verdicts[0].lambda ==
        doctest::Approx(rep.points[1].verdicts[0].lambda).epsilon(1e-12));

  // a sweep point with an impossible delay fails alone, the sweep continues
  const StabilityReport mixed =
      parameter_sweep(net, cl, irr, registry(), {SweepParameter::Kind::Delay, 0},
                      {0.001, 4.0}, so);
  CHECK_FALSE(mixed.points[0].ok);
  CHECK(mixed.points[1].ok);
}

TEST_CASE("block-restricted perturbations leave other clusters untouched") {
  const auto net = fixtures::fig1_network("fhn", "electrical", "chem_sigmoid_exc",
                                          0.08, 0.03, 4.0);
  const Clustering cl = coarsest_equitable_partition(net);
  const IrrTransform irr = build_transform(net, cl);
  int yellow = -1;
  for (size_t b = 0; b < irr.blocks.size(); ++b)
    if (irr.blocks[b].clusters == std::set<int>{3}) yellow = static_cast<int>(b);
  REQUIRE(yellow >= 0);

  std::map<int, double> lam;
  for (size_t b = 0; b < irr.blocks.size(); ++b) lam[static_cast<int>(b)] = -0.1;
  VerifyOptions vo;
  vo.dt = 0.02;
  vo.transient = 400.0;
  vo.horizon = 50.0;
  vo.perturbation = 1e-8;
  vo.perturb_block = yellow;
  const ConcordanceReport rep =
      verify_by_simulation(net, cl, irr, registry(), lam, vo);

  // C4 = cluster 3 received the kick; C1..C3 must stay on the manifold
  const SyncErrorReport err = sync_error(rep.traj, cl);
  for (size_t c = 0; c < err.clusters.size(); ++c) {
    double emax = 0.0;
    for (double e : err.cluster_error[c]) emax = std::max(emax, e);
    if (err.clusters[c] == cl.clusters[3])
      CHECK(emax > 1e-10);  // the kicked cluster moves
    else
      CHECK(emax <= 1e-10);  // linear-regime decoupling
  }
}
