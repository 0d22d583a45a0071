#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "csyn/models.hpp"
#include "csyn/types.hpp"

namespace csyn {

/// One coupling layer. adjacency(i, j) is the weight of the directed link
/// from node j INTO node i (row = receiver).
struct Layer {
  Matrix adjacency;
  double sigma = 1.0;
  double delay_ms = 0.0;
  std::string synapse_id;
  bool allow_self_coupling = false;
};

struct MultilayerNetwork {
  std::string name;
  std::vector<int> node_types;               // type_id per node (1-based ids)
  std::map<int, std::string> node_models;    // type_id -> registered model name
  std::vector<Layer> layers;

  int size() const { return static_cast<int>(node_types.size()); }
  int num_layers() const { return static_cast<int>(layers.size()); }

  const std::string& model_of(int node) const {
    return node_models.at(node_types[node]);
  }

  /// Checks all structural invariants against the registry; throws
  /// ValidationError on the first violation.
  void validate(const ModelRegistry& registry) const;

  /// Uniform per-node state dimension: max registered model dim plus one slot
  /// per distinct dynamical synapse kind used by the layers.
  int state_dim(const ModelRegistry& registry) const;

  double max_delay() const;
  double max_abs_weight() const;
};

/// Nearest-level quantization; equidistant ties resolve to the lower level.
template <typename Derived>
Matrix quantize_weights(const Eigen::MatrixBase<Derived>& raw,
                        const std::vector<double>& levels) {
  if (levels.empty()) throw ValidationError("quantize_weights: empty level list");
  if (!std::is_sorted(levels.begin(), levels.end()))
    throw ValidationError("quantize_weights: levels must be sorted ascending");
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      const double w = raw(i, j);
      double best = levels.front();
      double dist = std::abs(w - best);
      for (double lv : levels) {
        const double d = std::abs(w - lv);
        if (d < dist) {  // strict: ties keep the lower (earlier) level
          dist = d;
          best = lv;
        }
      }
      out(i, j) = best;
    }
  }
  return out;
}

/// Splits weights by link length: entries at distance < threshold_mm go to
/// the first (instantaneous) matrix, entries at distance >= threshold_mm to
/// the second (delayed). The two supports are disjoint and sum to `raw`.
template <typename DerivedA, typename DerivedB>
std::pair<Matrix, Matrix> classify_by_distance(
    const Eigen::MatrixBase<DerivedA>& raw,
    const Eigen::MatrixBase<DerivedB>& distances_mm, double threshold_mm) {
  if (raw.rows() != distances_mm.rows() || raw.cols() != distances_mm.cols())
    throw ValidationError("classify_by_distance: shape mismatch");
  if (!(threshold_mm > 0))
    throw ValidationError("classify_by_distance: threshold must be positive");
  Matrix near = Matrix::Zero(raw.rows(), raw.cols());
  Matrix far = Matrix::Zero(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    for (Eigen::Index j = 0; j < raw.cols(); ++j)
      (distances_mm(i, j) < threshold_mm ? near(i, j) : far(i, j)) = raw(i, j);
  return {near, far};
}

MultilayerNetwork load_network(const std::string& path,
                               const ModelRegistry& registry);
void save_network(const std::string& path, const MultilayerNetwork& net,
                  const ModelRegistry& registry);

/// One (source, target, weight, distance) link read from a tab/comma table.
struct EdgeRecord {
  int source = 0;  // 1-based in the table
  int target = 0;
  double weight = 0.0;
  double distance_mm = 0.0;
};

std::vector<EdgeRecord> load_edge_table(const std::string& path);

struct ConvertOptions {
  int num_nodes = 0;                       // 0: infer from max index
  std::vector<double> levels = {0.0, 0.1, 0.5, 1.0};
  double threshold_mm = 20.0;
  bool quantize_first = true;              // false: split by distance, then quantize
  double sigma1 = 1.0, sigma2 = 1.0;
  double delay2_ms = 5.0;
  std::string synapse1 = "rate_linear";
  std::string synapse2 = "rate_linear";
  std::string model1 = "rate_ei";          // type 1
  std::string model2 = "rate_ei_input";    // type 2 (external-input port)
  int type2_node = 1;                      // 1-based node carrying type 2; 0 = none
  std::string name = "converted";
};

/// Builds a two-layer network from an edge table: quantize weights, split by
/// link length into an instantaneous and a delayed layer.
MultilayerNetwork convert_edge_table(const std::vector<EdgeRecord>& edges,
                                     const ConvertOptions& opts);

}  // namespace csyn
