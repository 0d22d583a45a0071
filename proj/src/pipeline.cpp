#include "csyn/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "csyn/svg.hpp"
#include "csyn/version.hpp"

namespace csyn {

namespace {

const char* kPalette[] = {"#2ca02c", "#d62728", "#1f77b4", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#17becf",
                          "#bcbd22", "#7f7f7f"};

std::string color_of(int cluster, bool trivial) {
  if (trivial) return "#000000";
  return kPalette[cluster % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

std::filesystem::path out_path(const RunConfig& cfg, const std::string& file) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / file;
}

void write_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << " ";
      os << format_full(m(i, j));
    }
    os << "\n";
  }
}

MultilayerNetwork load_input(const RunConfig& cfg, const ModelRegistry& registry) {
  MultilayerNetwork net = load_network(cfg.net_path, registry);
  if (!cfg.quantize_levels.empty())
    for (Layer& ly : net.layers)
      ly.adjacency = quantize_weights(ly.adjacency, cfg.quantize_levels);
  return net;
}

struct Analysis {
  MultilayerNetwork net;
  Clustering clustering;
};

Analysis partition_stage(const RunConfig& cfg, const ModelRegistry& registry) {
  Analysis a{load_input(cfg, registry), {}};
  a.clustering = coarsest_equitable_partition(a.net, cfg.eps_sig);
  return a;
}

void emit_clustering(const RunConfig& cfg, const MultilayerNetwork& net,
                     const Clustering& cl) {
  std::ostringstream os;
  os << provenance_header(cfg);
  os << "# node cluster color\n";
  for (int i = 0; i < net.size(); ++i) {
    const int q = cl.assignment[i];
    os << (i + 1) << " " << (q + 1) << " "
       << color_of(q, cl.clusters[q].size() < 2) << "\n";
  }
  os << "# nontrivial clusters\n";
  for (const auto& c : nontrivial_clusters(cl)) {
    os << "#";
    for (int i : c) os << " " << (i + 1);
    os << "\n";
  }
  write_text_file(out_path(cfg, "clustering.txt").string(), os.str());

  // color-annotated graph description for external rendering
  std::ostringstream dot;
  dot << "digraph \"" << (net.name.empty() ? "net" : net.name) << "\" {\n";
  dot << "  node [style=filled];\n";
  for (int i = 0; i < net.size(); ++i) {
    const int q = cl.assignment[i];
    dot << "  n" << (i + 1) << " [fillcolor=\""
        << color_of(q, cl.clusters[q].size() < 2) << "\" fontcolor=\"white\"];\n";
  }
  for (int k = 0; k < net.num_layers(); ++k) {
    const Matrix& a = net.layers[k].adjacency;
    for (int i = 0; i < net.size(); ++i)
      for (int j = 0; j < net.size(); ++j)
        if (a(i, j) != 0.0)
          dot << "  n" << (j + 1) << " -> n" << (i + 1) << " [label=\""
              << format_full(a(i, j)) << "\" style=\""
              << (k == 0 ? "solid" : "dashed") << "\"];\n";
  }
  dot << "}\n";
  write_text_file(out_path(cfg, "clustering.dot").string(), dot.str());
}

void emit_transform(const RunConfig& cfg, const MultilayerNetwork& net,
                    const IrrTransform& irr) {
  {
    std::ostringstream os;
    os << provenance_header(cfg);
    write_matrix(os, irr.T);
    write_text_file(out_path(cfg, "T.txt").string(), os.str());
  }
  for (size_t k = 0; k < irr.B.size(); ++k) {
    std::ostringstream os;
    os << provenance_header(cfg);
    write_matrix(os, irr.B[k]);
    write_text_file(out_path(cfg, "B" + std::to_string(k + 1) + ".txt").string(),
                    os.str());
  }
  std::ostringstream os;
  os << provenance_header(cfg);
  os << "# sync_dim " << irr.sync_dim << "\n";
  os << "# orth_residual " << format_full(irr.orth_residual) << "\n";
  os << "# block_residual " << format_full(irr.block_residual) << "\n";
  os << "# lower_left_residual " << format_full(irr.lower_left_residual) << "\n";
  os << "# admissible " << (irr.admissible ? 1 : 0) << "\n";
  os << "# row support: transverse_row cluster\n";
  for (size_t m = 0; m < irr.row_support.size(); ++m)
    os << (irr.sync_dim + m + 1) << " " << (irr.row_support[m] + 1) << "\n";
  os << "# blocks: index size rows... | clusters...\n";
  for (size_t b = 0; b < irr.blocks.size(); ++b) {
    os << "block " << (b + 1) << " " << irr.blocks[b].rows.size() << " ";
    for (int r : irr.blocks[b].rows) os << (r + 1) << " ";
    os << "|";
    for (int c : irr.blocks[b].clusters) os << " " << (c + 1);
    os << "\n";
  }
  write_text_file(out_path(cfg, "blocks.txt").string(), os.str());

  // structure maps with block frames
  const double eps = 1e-12;
  for (size_t k = 0; k < irr.B.size(); ++k) {
    std::vector<BlockFrame> frames;
    frames.push_back({0, 0, irr.sync_dim, irr.sync_dim, "#1f77b4"});
    for (const auto& blk : irr.blocks)
      frames.push_back({blk.rows.front(), blk.rows.front(),
                        static_cast<int>(blk.rows.size()),
                        static_cast<int>(blk.rows.size()), "#d62728"});
    write_text_file(
        out_path(cfg, "B" + std::to_string(k + 1) + "_structure.svg").string(),
        render_structure_map(irr.B[k], eps, frames,
                             net.name + " B" + std::to_string(k + 1)));
  }
  write_text_file(out_path(cfg, "T_structure.svg").string(),
                  render_structure_map(irr.T, eps, {}, net.name + " T"));
}

void emit_report(const RunConfig& cfg, const Clustering& cl,
                 const StabilityReport& rep, const std::string& stem) {
  std::ostringstream os;
  os << provenance_header(cfg);
  os << "# parameter " << rep.parameter << "\n";
  os << "# dt " << format_full(rep.dt) << " transient " << format_full(rep.transient)
     << " horizon " << format_full(rep.horizon) << " renorm "
     << format_full(rep.renorm_interval) << " seed " << rep.seed << "\n";
  os << "# intertwined groups:";
  if (rep.intertwined.empty()) os << " none";
  for (const auto& g : rep.intertwined) {
    os << " {";
    for (size_t i = 0; i < g.size(); ++i) os << (i ? "," : "") << "C" << (g[i] + 1);
    os << "}";
  }
  os << "\n";
  os << "# value cluster lambda stderr stable\n";
  for (const StabilityPoint& pt : rep.points) {
    if (!pt.ok) {
      os << "# value " << format_full(pt.value) << " failed: " << pt.message
         << "\n";
      continue;
    }
    for (const ClusterVerdict& v : pt.verdicts) {
      double se = 0.0;  // standard error of the block achieving the max
      for (const BlockMle& b : pt.block_results)
        for (int bi : v.blocks)
          if (b.block == bi && b.lambda == v.lambda) se = b.stderr_;
      os << format_full(pt.value) << " C" << (v.cluster + 1) << " "
         << format_full(v.lambda) << " " << format_full(se) << " "
         << (v.stable ? 1 : 0) << "\n";
    }
  }
  if (!rep.crossings.empty()) {
    os << "# stability-edge crossings: cluster value direction\n";
    for (const EdgeCrossing& c : rep.crossings)
      os << "# crossing C" << (c.cluster + 1) << " " << format_full(c.value)
         << " " << (c.to_unstable ? "to_unstable" : "to_stable") << "\n";
  }
  write_text_file(out_path(cfg, stem + ".txt").string(), os.str());

  // one lambda-vs-parameter plot per nontrivial cluster
  std::map<int, SvgSeries> series;
  for (const StabilityPoint& pt : rep.points) {
    if (!pt.ok) continue;
    for (const ClusterVerdict& v : pt.verdicts) {
      auto& s = series[v.cluster];
      s.x.push_back(pt.value);
      s.y.push_back(v.lambda);
    }
  }
  for (auto& [c, s] : series) {
    s.label = "C" + std::to_string(c + 1);
    s.color = color_of(c, false);
    SvgPlotOptions po;
    po.title = "MLE of cluster C" + std::to_string(c + 1);
    po.xlabel = rep.parameter;
    po.ylabel = "lambda";
    po.hlines = {0.0};
    for (const EdgeCrossing& cr : rep.crossings)
      if (cr.cluster == c) po.vlines.push_back(cr.value);
    write_text_file(
        out_path(cfg, stem + "_C" + std::to_string(c + 1) + ".svg").string(),
        render_line_plot({s}, po));
  }
  (void)cl;
}

}  // namespace

std::string RunConfig::canonical_text() const {
  std::ostringstream os;
  os << "command=" << command << "\nnet=" << net_path << "\nedges=" << edges_path
     << "\ndt=" << format_full(dt) << "\ntransient=" << format_full(transient)
     << "\nhorizon=" << format_full(horizon)
     << "\nrenorm=" << format_full(renorm_interval)
     << "\nalign=" << format_full(align) << "\nsweep=" << sweep_param << ":"
     << format_full(sweep_min) << ":" << format_full(sweep_max) << ":"
     << sweep_count << "\neps_sig=" << format_full(eps_sig)
     << "\neps_block=" << format_full(eps_block) << "\nseed=" << seed
     << "\njobs=" << jobs << "\npulse=" << pulse_node << ":"
     << format_full(pulse_amplitude) << ":" << format_full(pulse_t_on) << ":"
     << format_full(pulse_duration)
     << "\nperturbation=" << format_full(perturbation) << "\nquantize=";
  for (double v : quantize_levels) os << format_full(v) << ",";
  os << "\nforce=" << force << "\n";
  return os.str();
}

std::string provenance_header(const RunConfig& cfg) {
  std::ostringstream os;
  os << "# csyn " << CSYN_VERSION << "\n";
  os << "# config_hash " << std::hex << cfg.hash() << std::dec << "\n";
  std::istringstream is(cfg.canonical_text());
  std::string line;
  while (std::getline(is, line)) os << "# cfg " << line << "\n";
  return os.str();
}

SweepParameter parse_sweep_parameter(const std::string& spec) {
  SweepParameter p;
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  if (kind == "delay")
    p.kind = SweepParameter::Kind::Delay;
  else if (kind == "sigma")
    p.kind = SweepParameter::Kind::Sigma;
  else
    throw ValidationError("sweep parameter must be delay:<layer> or sigma:<layer>");
  if (colon == std::string::npos)
    throw ValidationError("sweep parameter needs a layer, e.g. delay:2");
  p.layer = std::stoi(spec.substr(colon + 1)) - 1;
  return p;
}

int run_convert(const RunConfig& cfg, const ModelRegistry& registry) {
  const auto edges = load_edge_table(cfg.edges_path);
  MultilayerNetwork net = convert_edge_table(edges, cfg.convert);
  net.validate(registry);
  save_network(out_path(cfg, net.name + ".net").string(), net, registry);
  std::cout << "wrote " << out_path(cfg, net.name + ".net").string() << " (N="
            << net.size() << ", L=" << net.num_layers() << ")\n";
  return kExitOk;
}

int run_partition(const RunConfig& cfg, const ModelRegistry& registry) {
  const Analysis a = partition_stage(cfg, registry);
  emit_clustering(cfg, a.net, a.clustering);
  std::cout << "Q=" << a.clustering.count() << " clusters, "
            << nontrivial_clusters(a.clustering).size() << " nontrivial\n";
  return kExitOk;
}

int run_quotient(const RunConfig& cfg, const ModelRegistry& registry) {
  const Analysis a = partition_stage(cfg, registry);
  const QuotientNetwork q = build_quotient(a.net, a.clustering, cfg.eps_sig);
  save_network(out_path(cfg, "quotient.net").string(), q.net, registry);
  std::ostringstream os;
  os << provenance_header(cfg);
  os << "# cluster multiplicity members...\n";
  for (int c = 0; c < q.clustering.count(); ++c) {
    os << (c + 1) << " " << q.multiplicity[c];
    for (int i : q.clustering.clusters[c]) os << " " << (i + 1);
    os << "\n";
  }
  write_text_file(out_path(cfg, "quotient_info.txt").string(), os.str());
  return kExitOk;
}

int run_transform(const RunConfig& cfg, const ModelRegistry& registry) {
  const Analysis a = partition_stage(cfg, registry);
  IrrOptions io;
  io.eps_block = cfg.eps_block;
  io.seed = cfg.seed;
  io.require_admissible = !cfg.force;
  const IrrTransform irr = build_transform(a.net, a.clustering, io);
  emit_clustering(cfg, a.net, a.clustering);
  emit_transform(cfg, a.net, irr);
  return kExitOk;
}

int run_analyze(const RunConfig& cfg, const ModelRegistry& registry) {
  const Analysis a = partition_stage(cfg, registry);
  IrrOptions io;
  io.eps_block = cfg.eps_block;
  io.seed = cfg.seed;
  io.require_admissible = !cfg.force;
  const IrrTransform irr = build_transform(a.net, a.clustering, io);
  emit_clustering(cfg, a.net, a.clustering);
  emit_transform(cfg, a.net, irr);

  SweepOptions so;
  so.dt = cfg.dt;
  so.transient = cfg.transient;
  so.mle.dt = cfg.dt;
  so.mle.horizon = cfg.horizon;
  so.mle.renorm_interval = cfg.renorm_interval;
  so.mle.align = cfg.align;
  so.mle.seed = cfg.seed;
  so.jobs = cfg.jobs;
  // single-point "sweep" at the current parameter value
  const SweepParameter param = parse_sweep_parameter(cfg.sweep_param);
  const double current = param.kind == SweepParameter::Kind::Delay
                             ? a.net.layers[param.layer].delay_ms
                             : a.net.layers[param.layer].sigma;
  const StabilityReport rep = parameter_sweep(a.net, a.clustering, irr, registry,
                                              param, {current}, so);
  emit_report(cfg, a.clustering, rep, "stability");
  if (!rep.points[0].ok) {
    std::cerr << "analysis failed: " << rep.points[0].message << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int run_sweep(const RunConfig& cfg, const ModelRegistry& registry) {
  const Analysis a = partition_stage(cfg, registry);
  IrrOptions io;
  io.eps_block = cfg.eps_block;
  io.seed = cfg.seed;
  io.require_admissible = !cfg.force;
  const IrrTransform irr = build_transform(a.net, a.clustering, io);

  std::vector<double> values;
  if (cfg.sweep_count < 1) throw ValidationError("sweep count must be >= 1");
  for (int i = 0; i < cfg.sweep_count; ++i)
    values.push_back(cfg.sweep_count == 1
                         ? cfg.sweep_min
                         : cfg.sweep_min + (cfg.sweep_max - cfg.sweep_min) * i /
                               (cfg.sweep_count - 1));

  SweepOptions so;
  so.dt = cfg.dt;
  so.transient = cfg.transient;
  so.mle.dt = cfg.dt;
  so.mle.horizon = cfg.horizon;
  so.mle.renorm_interval = cfg.renorm_interval;
  so.mle.align = cfg.align;
  so.mle.seed = cfg.seed;
  so.jobs = cfg.jobs;
  const SweepParameter param = parse_sweep_parameter(cfg.sweep_param);
  const StabilityReport rep =
      parameter_sweep(a.net, a.clustering, irr, registry, param, values, so);
  emit_report(cfg, a.clustering, rep, "sweep");
  bool any_ok = false;
  for (const auto& pt : rep.points) any_ok |= pt.ok;
  return any_ok ? kExitOk : kExitNumerical;
}

int run_pulse(const RunConfig& cfg, const ModelRegistry& registry) {
  const MultilayerNetwork net = load_input(cfg, registry);
  NetworkSystem sys(net, registry);
  PulseSpec spec;
  spec.target_node = cfg.pulse_node - 1;
  spec.amplitude = cfg.pulse_amplitude;
  spec.t_on = cfg.pulse_t_on;
  spec.duration = cfg.pulse_duration;
  PulseOptions po;
  po.dt = cfg.dt;
  po.settle_time = cfg.transient;
  po.horizon = cfg.horizon;
  const PulseResponse resp = pulse_response(sys, spec, po);

  std::ostringstream os;
  os << provenance_header(cfg);
  os << "# t";
  for (int i = 0; i < net.size(); ++i) os << " v" << (i + 1);
  os << "\n";
  const int stride = std::max(1, resp.traj.size() / 4000);
  for (int s = 0; s < resp.traj.size(); s += stride) {
    os << format_full(resp.traj.time_at(s));
    for (int i = 0; i < net.size(); ++i)
      os << " " << format_full(resp.traj.samples[s](0, i));
    os << "\n";
  }
  write_text_file(out_path(cfg, "traces.txt").string(), os.str());

  std::ostringstream fs;
  fs << provenance_header(cfg);
  fs << "# node tau r2 peak_dev valid\n";
  for (const DecayFit& f : resp.fits)
    fs << (f.node + 1) << " " << format_full(f.tau) << " " << format_full(f.r2)
       << " " << format_full(f.peak_dev) << " " << (f.valid ? 1 : 0) << "\n";
  write_text_file(out_path(cfg, "decay_fits.txt").string(), fs.str());

  std::vector<SvgSeries> series;
  for (int i = 0; i < net.size(); ++i) {
    SvgSeries s;
    s.color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (net.size() <= 10) s.label = "n" + std::to_string(i + 1);
    for (int t = 0; t < resp.traj.size(); t += stride) {
      s.x.push_back(resp.traj.time_at(t));
      s.y.push_back(resp.traj.samples[t](0, i));
    }
    series.push_back(std::move(s));
  }
  SvgPlotOptions po2;
  po2.title = "pulse response";
  po2.xlabel = "t [ms]";
  po2.ylabel = "v";
  write_text_file(out_path(cfg, "traces.svg").string(),
                  render_line_plot(series, po2));
  return kExitOk;
}

int run_verify(const RunConfig& cfg, const ModelRegistry& registry) {
  const Analysis a = partition_stage(cfg, registry);
  IrrOptions io;
  io.eps_block = cfg.eps_block;
  io.seed = cfg.seed;
  io.require_admissible = !cfg.force;
  const IrrTransform irr = build_transform(a.net, a.clustering, io);

  const QuotientNetwork q = build_quotient(a.net, a.clustering, cfg.eps_sig);
  SyncSource sync = prepare_sync(q, registry, cfg.dt, cfg.transient, cfg.seed);
  MleOptions mo;
  mo.dt = cfg.dt;
  mo.horizon = cfg.horizon;
  mo.renorm_interval = cfg.renorm_interval;
  mo.align = cfg.align;
  mo.seed = cfg.seed;
  std::map<int, double> lambdas;
  for (size_t b = 0; b < irr.blocks.size(); ++b) {
    const VariationalSystem vs = build_variational(q, irr, static_cast<int>(b));
    const BlockMle r = block_mle(vs, sync, mo);
    if (!r.ok) {
      std::cerr << "block " << b << " failed: " << r.message << "\n";
      return kExitNumerical;
    }
    lambdas[static_cast<int>(b)] = r.lambda;
  }

  VerifyOptions vo;
  vo.dt = cfg.dt;
  vo.transient = cfg.transient;
  vo.horizon = cfg.horizon;
  vo.perturbation = cfg.perturbation;
  vo.seed = cfg.seed;
  vo.perturb_block = cfg.perturb_block;
  const ConcordanceReport rep =
      verify_by_simulation(a.net, a.clustering, irr, registry, lambdas, vo);

  std::ostringstream os;
  os << provenance_header(cfg);
  os << "# cluster lambda predicted observed concordant flagged\n";
  for (const ClusterConcordance& c : rep.clusters) {
    const char* obs = c.observed == SyncOutcome::Decayed   ? "decayed"
                      : c.observed == SyncOutcome::Grew    ? "grew"
                                                           : "inconclusive";
    os << "C" << (c.cluster + 1) << " " << format_full(c.lambda) << " "
       << (c.predicted_stable ? "stable" : "unstable") << " " << obs << " "
       << (c.concordant ? 1 : 0) << " " << (c.flagged ? 1 : 0) << "\n";
  }
  os << "# empirical clusters:";
  for (const auto& g : rep.empirical_clusters) {
    os << " {";
    for (size_t i = 0; i < g.size(); ++i) os << (i ? "," : "") << (g[i] + 1);
    os << "}";
  }
  os << "\n# predicted clusters:";
  for (const auto& g : rep.predicted_clusters) {
    os << " {";
    for (size_t i = 0; i < g.size(); ++i) os << (i ? "," : "") << (g[i] + 1);
    os << "}";
  }
  os << "\n# refinement_match " << (rep.refinement_match ? 1 : 0) << "\n";
  os << "# branch_symmetry " << format_full(rep.branch_symmetry) << "\n";
  write_text_file(out_path(cfg, "concordance.txt").string(), os.str());
  return kExitOk;
}

}  // namespace csyn
