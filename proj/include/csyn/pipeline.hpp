#pragma once

#include <optional>
#include <string>
#include <vector>

#include "csyn/models.hpp"
#include "csyn/stability.hpp"

namespace csyn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitAdmissibility = 4;

/// Everything a run needs; echoed verbatim into every output file for
/// provenance.
struct RunConfig {
  std::string command;
  std::string net_path;
  std::string edges_path;
  std::string out_dir = ".";

  double dt = 0.01;
  double transient = 500.0;
  double horizon = 2000.0;
  double renorm_interval = 1.0;
  double align = 100.0;

  // sweep spec
  std::string sweep_param = "delay:2";  // kind:layer (1-based layer)
  double sweep_min = 0.0;
  double sweep_max = 16.0;
  int sweep_count = 8;

  // tolerance overrides (< 0: module defaults)
  double eps_sig = -1.0;
  double eps_block = -1.0;

  // optional re-quantization of loaded weights before analysis
  std::vector<double> quantize_levels;

  std::uint64_t seed = 1;
  int jobs = 0;

  // pulse
  int pulse_node = 1;  // 1-based
  double pulse_amplitude = 1.0;
  double pulse_t_on = 50.0;
  double pulse_duration = 10.0;

  // verify
  double perturbation = 1e-6;
  std::optional<int> perturb_block;

  // convert
  ConvertOptions convert;
  bool force = false;  // proceed past the admissibility gate

  std::string canonical_text() const;
  std::uint64_t hash() const { return fnv1a(canonical_text()); }
};

/// Comment header (version, config hash, echoed config) prepended to every
/// output file.
std::string provenance_header(const RunConfig& cfg);

int run_convert(const RunConfig& cfg, const ModelRegistry& registry);
int run_partition(const RunConfig& cfg, const ModelRegistry& registry);
int run_quotient(const RunConfig& cfg, const ModelRegistry& registry);
int run_transform(const RunConfig& cfg, const ModelRegistry& registry);
int run_analyze(const RunConfig& cfg, const ModelRegistry& registry);
int run_sweep(const RunConfig& cfg, const ModelRegistry& registry);
int run_pulse(const RunConfig& cfg, const ModelRegistry& registry);
int run_verify(const RunConfig& cfg, const ModelRegistry& registry);

SweepParameter parse_sweep_parameter(const std::string& spec);

}  // namespace csyn
