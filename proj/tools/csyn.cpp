#include <CLI11.hpp>

#include <iostream>

#include "csyn/pipeline.hpp"
#include "csyn/version.hpp"

namespace {

void add_common(CLI::App* cmd, csyn::RunConfig& cfg) {
  cmd->add_option("--net", cfg.net_path, "network file");
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_option("--dt", cfg.dt, "integration step [ms]");
  cmd->add_option("--transient", cfg.transient, "transient discard [ms]");
  cmd->add_option("--horizon", cfg.horizon, "analysis horizon [ms]");
  cmd->add_option("--renorm", cfg.renorm_interval, "renormalization interval [ms]");
  cmd->add_option("--align", cfg.align, "Benettin alignment window [ms]");
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("--jobs", cfg.jobs, "worker threads (0: all cores)");
  cmd->add_option("--eps-sig", cfg.eps_sig, "signature tolerance override");
  cmd->add_option("--eps-block", cfg.eps_block, "block tolerance override");
  cmd->add_option("--quantize", cfg.quantize_levels,
                  "re-quantize loaded weights to these levels");
  cmd->add_flag("--force", cfg.force, "proceed past the admissibility gate");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cluster synchronization analysis for multilayer delayed networks"};
  app.set_version_flag("--version", CSYN_VERSION);
  app.require_subcommand(1);

  csyn::RunConfig cfg;

  auto* convert = app.add_subcommand(
      "convert", "build a two-layer network file from an edge table");
  convert->add_option("--edges", cfg.edges_path, "edge table (source target weight distance_mm)")
      ->required();
  convert->add_option("--out", cfg.out_dir, "output directory");
  convert->add_option("--nodes", cfg.convert.num_nodes, "node count (0: infer)");
  convert->add_option("--levels", cfg.convert.levels, "quantization levels");
  convert->add_option("--threshold-mm", cfg.convert.threshold_mm,
                      "instantaneous/delayed split length");
  convert->add_option("--sigma1", cfg.convert.sigma1, "layer-1 coupling strength");
  convert->add_option("--sigma2", cfg.convert.sigma2, "layer-2 coupling strength");
  convert->add_option("--delay2", cfg.convert.delay2_ms, "layer-2 delay [ms]");
  convert->add_option("--synapse1", cfg.convert.synapse1, "layer-1 synapse model");
  convert->add_option("--synapse2", cfg.convert.synapse2, "layer-2 synapse model");
  convert->add_option("--model1", cfg.convert.model1, "type-1 node model");
  convert->add_option("--model2", cfg.convert.model2, "type-2 node model");
  convert->add_option("--type2-node", cfg.convert.type2_node,
                      "node carrying type 2 (0: none)");
  convert->add_option("--name", cfg.convert.name, "network name");
  bool split_first = false;
  convert->add_flag("--split-first", split_first,
                    "split by distance before quantizing");

  auto* partition = app.add_subcommand("partition", "equitable clusters");
  add_common(partition, cfg);
  auto* quotient = app.add_subcommand("quotient", "quotient network");
  add_common(quotient, cfg);
  auto* transform = app.add_subcommand("transform",
                                       "perturbation coordinate transform");
  add_common(transform, cfg);
  auto* analyze = app.add_subcommand("analyze", "full single-point analysis");
  add_common(analyze, cfg);
  auto* sweep = app.add_subcommand("sweep", "parameter sweep of cluster MLEs");
  add_common(sweep, cfg);
  sweep->add_option("--param", cfg.sweep_param, "delay:<layer> or sigma:<layer>");
  sweep->add_option("--min", cfg.sweep_min, "sweep range start");
  sweep->add_option("--max", cfg.sweep_max, "sweep range end");
  sweep->add_option("--count", cfg.sweep_count, "grid points");
  auto* pulse = app.add_subcommand("pulse", "pulse response and decay fits");
  add_common(pulse, cfg);
  pulse->add_option("--node", cfg.pulse_node, "target node (1-based)");
  pulse->add_option("--amplitude", cfg.pulse_amplitude, "pulse amplitude");
  pulse->add_option("--t-on", cfg.pulse_t_on, "pulse onset [ms]");
  pulse->add_option("--duration", cfg.pulse_duration, "pulse length [ms]");
  auto* verify = app.add_subcommand("verify",
                                    "direct-simulation stability cross-check");
  add_common(verify, cfg);
  verify->add_option("--param", cfg.sweep_param, "parameter at this point");
  verify->add_option("--perturb", cfg.perturbation, "perturbation amplitude");
  int pblock = -1;
  verify->add_option("--block", pblock, "perturb only this block (1-based)");

  for (CLI::App* c : {partition, quotient, transform, analyze, sweep, pulse, verify})
    c->get_option("--net")->required();

  CLI11_PARSE(app, argc, argv);

  cfg.convert.quantize_first = !split_first;
  if (pblock >= 1) cfg.perturb_block = pblock - 1;

  const csyn::ModelRegistry registry = csyn::builtin_models();
  try {
    if (app.got_subcommand(convert)) {
      cfg.command = "convert";
      return csyn::run_convert(cfg, registry);
    }
    if (app.got_subcommand(partition)) {
      cfg.command = "partition";
      return csyn::run_partition(cfg, registry);
    }
    if (app.got_subcommand(quotient)) {
      cfg.command = "quotient";
      return csyn::run_quotient(cfg, registry);
    }
    if (app.got_subcommand(transform)) {
      cfg.command = "transform";
      return csyn::run_transform(cfg, registry);
    }
    if (app.got_subcommand(analyze)) {
      cfg.command = "analyze";
      return csyn::run_analyze(cfg, registry);
    }
    if (app.got_subcommand(sweep)) {
      cfg.command = "sweep";
      return csyn::run_sweep(cfg, registry);
    }
    if (app.got_subcommand(pulse)) {
      cfg.command = "pulse";
      return csyn::run_pulse(cfg, registry);
    }
    if (app.got_subcommand(verify)) {
      cfg.command = "verify";
      return csyn::run_verify(cfg, registry);
    }
  } catch (const csyn::AdmissibilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return csyn::kExitAdmissibility;
  } catch (const csyn::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return csyn::kExitNumerical;
  } catch (const csyn::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return csyn::kExitValidation;
  } catch (const csyn::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return csyn::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
