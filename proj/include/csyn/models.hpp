#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "csyn/types.hpp"

namespace csyn {

/// Vector field of an isolated node. State dimension is fixed per model;
/// networks pad shorter models with zero components so that all nodes share
/// one state dimension.
class NodeModel {
 public:
  virtual ~NodeModel() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;

  /// dx = f(x). Writes exactly dim() components.
  virtual void deriv(const Eigen::Ref<const Vector>& x,
                     Eigen::Ref<Vector> dx) const = 0;

  /// J = df/dx, dim() x dim(). Default: central finite differences.
  virtual void jacobian(const Eigen::Ref<const Vector>& x,
                        Eigen::Ref<Matrix> jac) const;

  virtual std::map<std::string, double> parameters() const { return {}; }

  /// A state on or near the model's typical operating range, used to seed
  /// initial histories.
  virtual Vector typical_state() const;
};

/// Synaptic coupling entering the first state component of the post-synaptic
/// node:
///
///   a(V_post, x_pre_delayed) = gain(V_post) * pre(x_pre_delayed) + offset(V_post)
///
/// The affine split lets the network sum pre-signals with one mat-vec per
/// layer. Dynamical synapses own one extra state component per node, appended
/// to the node state vector; `state_index` tells the synapse where its state
/// lives inside the (network-assembled) augmented state.
class SynapseModel {
 public:
  virtual ~SynapseModel() = default;

  virtual std::string name() const = 0;
  virtual bool dynamical() const { return false; }
  virtual bool allows_self_coupling() const { return false; }

  virtual double pre(const Eigen::Ref<const Vector>& xd, int state_index) const = 0;
  /// Gradient of pre() w.r.t. the delayed pre-synaptic state.
  virtual void dpre(const Eigen::Ref<const Vector>& xd, int state_index,
                    Eigen::Ref<Vector> grad) const = 0;

  virtual double gain(double v_post) const = 0;
  virtual double dgain(double v_post) const = 0;
  virtual double offset(double v_post) const = 0;
  virtual double doffset(double v_post) const = 0;

  double activation(double v_post, const Eigen::Ref<const Vector>& xd,
                    int state_index) const {
    return gain(v_post) * pre(xd, state_index) + offset(v_post);
  }
  /// d activation / d V_post.
  double d_post(double v_post, const Eigen::Ref<const Vector>& xd,
                int state_index) const {
    return dgain(v_post) * pre(xd, state_index) + doffset(v_post);
  }

  // Synaptic state dynamics ds/dt = g(V_pre, s); only for dynamical kind.
  virtual double state_rate(double v_pre, double s) const;
  virtual double dstate_dv(double v_pre, double s) const;
  virtual double dstate_ds(double v_pre, double s) const;
  virtual double state_init() const { return 0.0; }

  virtual std::map<std::string, double> parameters() const { return {}; }
};

class ModelRegistry {
 public:
  void add_node_model(std::shared_ptr<const NodeModel> m);
  void add_synapse_model(std::shared_ptr<const SynapseModel> m);

  const NodeModel& node_model(const std::string& name) const;
  const SynapseModel& synapse_model(const std::string& name) const;
  bool has_node_model(const std::string& name) const;
  bool has_synapse_model(const std::string& name) const;

  std::vector<std::string> node_model_names() const;
  std::vector<std::string> synapse_model_names() const;

 private:
  std::map<std::string, std::shared_ptr<const NodeModel>> nodes_;
  std::map<std::string, std::shared_ptr<const SynapseModel>> synapses_;
};

/// Registry with the built-in models:
///   nodes:   fhn (n=2), hindmarsh_rose (n=3), rate_ei (n=2)
///   synapses: electrical, chem_sigmoid (exc/inh variants), chem_dynamical,
///             rate_linear
ModelRegistry builtin_models();

// Built-in factories, for tests and custom parameterizations.
std::shared_ptr<const NodeModel> make_fhn(double eps = 0.08, double a = 0.7,
                                          double b = 0.8, double current = 0.5);
std::shared_ptr<const NodeModel> make_hindmarsh_rose(double a = 1.0, double b = 3.0,
                                                     double c = 1.0, double d = 5.0,
                                                     double r = 0.006, double s = 4.0,
                                                     double x_rest = -1.6,
                                                     double current = 2.0);
std::shared_ptr<const NodeModel> make_rate_ei(const std::string& name = "rate_ei",
                                              double tau_e = 20.0, double tau_i = 10.0,
                                              double w_ee = 1.5, double w_ei = 1.2,
                                              double w_ie = 1.0, double w_ii = 0.5,
                                              double drive = 1.0);
std::shared_ptr<const SynapseModel> make_electrical();
std::shared_ptr<const SynapseModel> make_chem_sigmoid(const std::string& name,
                                                      double e_syn, double nu,
                                                      double theta);
std::shared_ptr<const SynapseModel> make_chem_dynamical(const std::string& name,
                                                        double e_syn, double nu,
                                                        double theta, double alpha,
                                                        double beta);
std::shared_ptr<const SynapseModel> make_rate_linear();

/// Max relative deviation between the registered Jacobian/derivatives and
/// central finite differences at `trials` pseudo-random states.
double jacobian_check(const NodeModel& m, std::uint64_t seed, int trials = 20);
double synapse_derivative_check(const SynapseModel& m, int state_dim,
                                std::uint64_t seed, int trials = 20);

}  // namespace csyn
