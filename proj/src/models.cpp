#include "csyn/models.hpp"

#include <cmath>
#include <random>

namespace csyn {

void NodeModel::jacobian(const Eigen::Ref<const Vector>& x,
                         Eigen::Ref<Matrix> jac) const {
  const int n = dim();
  Vector xp(n), xm(n), fp(n), fm(n);
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    xp = x;
    xm = x;
    xp[j] += h;
    xm[j] -= h;
    deriv(xp, fp);
    deriv(xm, fm);
    jac.col(j) = (fp - fm) / (2 * h);
  }
}

Vector NodeModel::typical_state() const { return Vector::Zero(dim()); }

double SynapseModel::state_rate(double, double) const {
  throw ValidationError("synapse '" + name() + "' has no state dynamics");
}
double SynapseModel::dstate_dv(double, double) const {
  throw ValidationError("synapse '" + name() + "' has no state dynamics");
}
double SynapseModel::dstate_ds(double, double) const {
  throw ValidationError("synapse '" + name() + "' has no state dynamics");
}

void ModelRegistry::add_node_model(std::shared_ptr<const NodeModel> m) {
  nodes_[m->name()] = std::move(m);
}
void ModelRegistry::add_synapse_model(std::shared_ptr<const SynapseModel> m) {
  synapses_[m->name()] = std::move(m);
}
const NodeModel& ModelRegistry::node_model(const std::string& name) const {
  auto it = nodes_.find(name);
  if (it == nodes_.end())
    throw ValidationError("unknown node model '" + name + "'");
  return *it->second;
}
const SynapseModel& ModelRegistry::synapse_model(const std::string& name) const {
  auto it = synapses_.find(name);
  if (it == synapses_.end())
    throw ValidationError("unknown synapse model '" + name + "'");
  return *it->second;
}
bool ModelRegistry::has_node_model(const std::string& name) const {
  return nodes_.count(name) > 0;
}
bool ModelRegistry::has_synapse_model(const std::string& name) const {
  return synapses_.count(name) > 0;
}
std::vector<std::string> ModelRegistry::node_model_names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : nodes_) out.push_back(k);
  return out;
}
std::vector<std::string> ModelRegistry::synapse_model_names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : synapses_) out.push_back(k);
  return out;
}

namespace {

// --- node models -----------------------------------------------------------

class FhnModel final : public NodeModel {
 public:
  FhnModel(double eps, double a, double b, double current)
      : eps_(eps), a_(a), b_(b), i_(current) {}
  std::string name() const override { return "fhn"; }
  int dim() const override { return 2; }
  void deriv(const Eigen::Ref<const Vector>& x,
             Eigen::Ref<Vector> dx) const override {
    const double v = x[0], w = x[1];
    dx[0] = v - v * v * v / 3.0 - w + i_;
    dx[1] = eps_ * (v + a_ - b_ * w);
  }
  void jacobian(const Eigen::Ref<const Vector>& x,
                Eigen::Ref<Matrix> jac) const override {
    const double v = x[0];
    jac(0, 0) = 1.0 - v * v;
    jac(0, 1) = -1.0;
    jac(1, 0) = eps_;
    jac(1, 1) = -eps_ * b_;
  }
  std::map<std::string, double> parameters() const override {
    return {{"eps", eps_}, {"a", a_}, {"b", b_}, {"I", i_}};
  }
  Vector typical_state() const override {
    Vector x(2);
    x << 1.0, 0.5;
    return x;
  }

 private:
  double eps_, a_, b_, i_;
};

class HindmarshRoseModel final : public NodeModel {
 public:
  HindmarshRoseModel(double a, double b, double c, double d, double r, double s,
                     double x_rest, double current)
      : a_(a), b_(b), c_(c), d_(d), r_(r), s_(s), xr_(x_rest), i_(current) {}
  std::string name() const override { return "hindmarsh_rose"; }
  int dim() const override { return 3; }
  void deriv(const Eigen::Ref<const Vector>& x,
             Eigen::Ref<Vector> dx) const override {
    const double v = x[0], y = x[1], z = x[2];
    dx[0] = y + b_ * v * v - a_ * v * v * v - z + i_;
    dx[1] = c_ - d_ * v * v - y;
    dx[2] = r_ * (s_ * (v - xr_) - z);
  }
  void jacobian(const Eigen::Ref<const Vector>& x,
                Eigen::Ref<Matrix> jac) const override {
    const double v = x[0];
    jac.setZero();
    jac(0, 0) = 2.0 * b_ * v - 3.0 * a_ * v * v;
    jac(0, 1) = 1.0;
    jac(0, 2) = -1.0;
    jac(1, 0) = -2.0 * d_ * v;
    jac(1, 1) = -1.0;
    jac(2, 0) = r_ * s_;
    jac(2, 2) = -r_;
  }
  std::map<std::string, double> parameters() const override {
    return {{"a", a_}, {"b", b_}, {"c", c_},  {"d", d_},
            {"r", r_}, {"s", s_}, {"xr", xr_}, {"I", i_}};
  }
  Vector typical_state() const override {
    Vector x(3);
    x << -1.0, -5.0, 3.0;
    return x;
  }

 private:
  double a_, b_, c_, d_, r_, s_, xr_, i_;
};

// Linear excitatory/inhibitory rate unit; first component is the excitatory
// rate, which carries the synaptic coupling and the external-input port.
class RateEiModel final : public NodeModel {
 public:
  RateEiModel(std::string name, double tau_e, double tau_i, double w_ee,
              double w_ei, double w_ie, double w_ii, double drive)
      : name_(std::move(name)),
        te_(tau_e),
        ti_(tau_i),
        wee_(w_ee),
        wei_(w_ei),
        wie_(w_ie),
        wii_(w_ii),
        drive_(drive) {}
  std::string name() const override { return name_; }
  int dim() const override { return 2; }
  void deriv(const Eigen::Ref<const Vector>& x,
             Eigen::Ref<Vector> dx) const override {
    const double re = x[0], ri = x[1];
    dx[0] = (-re + wee_ * re - wei_ * ri + drive_) / te_;
    dx[1] = (-ri + wie_ * re - wii_ * ri) / ti_;
  }
  void jacobian(const Eigen::Ref<const Vector>&,
                Eigen::Ref<Matrix> jac) const override {
    jac(0, 0) = (wee_ - 1.0) / te_;
    jac(0, 1) = -wei_ / te_;
    jac(1, 0) = wie_ / ti_;
    jac(1, 1) = -(1.0 + wii_) / ti_;
  }
  std::map<std::string, double> parameters() const override {
    return {{"tau_e", te_}, {"tau_i", ti_}, {"w_ee", wee_}, {"w_ei", wei_},
            {"w_ie", wie_}, {"w_ii", wii_}, {"drive", drive_}};
  }
  Vector typical_state() const override {
    Vector x(2);
    x << 1.0, 0.5;
    return x;
  }

 private:
  std::string name_;
  double te_, ti_, wee_, wei_, wie_, wii_, drive_;
};

// --- synapse models ---------------------------------------------------------

// a = V_pre(t - delta) - V_post
class ElectricalSynapse final : public SynapseModel {
 public:
  std::string name() const override { return "electrical"; }
  double pre(const Eigen::Ref<const Vector>& xd, int) const override {
    return xd[0];
  }
  void dpre(const Eigen::Ref<const Vector>&, int,
            Eigen::Ref<Vector> grad) const override {
    grad.setZero();
    grad[0] = 1.0;
  }
  double gain(double) const override { return 1.0; }
  double dgain(double) const override { return 0.0; }
  double offset(double v) const override { return -v; }
  double doffset(double) const override { return -1.0; }
  bool allows_self_coupling() const override { return true; }  // vanishes anyway
};

double sigmoid(double v, double nu, double theta) {
  return 1.0 / (1.0 + std::exp(-nu * (v - theta)));
}

// a = (E_s - V_post) * Gamma(V_pre(t - delta))
class ChemSigmoidSynapse final : public SynapseModel {
 public:
  ChemSigmoidSynapse(std::string name, double e_syn, double nu, double theta)
      : name_(std::move(name)), es_(e_syn), nu_(nu), theta_(theta) {}
  std::string name() const override { return name_; }
  double pre(const Eigen::Ref<const Vector>& xd, int) const override {
    return sigmoid(xd[0], nu_, theta_);
  }
  void dpre(const Eigen::Ref<const Vector>& xd, int,
            Eigen::Ref<Vector> grad) const override {
    grad.setZero();
    const double g = sigmoid(xd[0], nu_, theta_);
    grad[0] = nu_ * g * (1.0 - g);
  }
  double gain(double v) const override { return es_ - v; }
  double dgain(double) const override { return -1.0; }
  double offset(double) const override { return 0.0; }
  double doffset(double) const override { return 0.0; }
  std::map<std::string, double> parameters() const override {
    return {{"E_s", es_}, {"nu", nu_}, {"theta", theta_}};
  }

 private:
  std::string name_;
  double es_, nu_, theta_;
};

// ds/dt = alpha * Gamma(V_pre) * (1 - s) - beta * s
// a = (E_s - V_post) * s_pre(t - delta)
class ChemDynamicalSynapse final : public SynapseModel {
 public:
  ChemDynamicalSynapse(std::string name, double e_syn, double nu, double theta,
                       double alpha, double beta)
      : name_(std::move(name)),
        es_(e_syn),
        nu_(nu),
        theta_(theta),
        alpha_(alpha),
        beta_(beta) {}
  std::string name() const override { return name_; }
  bool dynamical() const override { return true; }
  double pre(const Eigen::Ref<const Vector>& xd, int state_index) const override {
    return xd[state_index];
  }
  void dpre(const Eigen::Ref<const Vector>&, int state_index,
            Eigen::Ref<Vector> grad) const override {
    grad.setZero();
    grad[state_index] = 1.0;
  }
  double gain(double v) const override { return es_ - v; }
  double dgain(double) const override { return -1.0; }
  double offset(double) const override { return 0.0; }
  double doffset(double) const override { return 0.0; }
  double state_rate(double v_pre, double s) const override {
    return alpha_ * sigmoid(v_pre, nu_, theta_) * (1.0 - s) - beta_ * s;
  }
  double dstate_dv(double v_pre, double s) const override {
    const double g = sigmoid(v_pre, nu_, theta_);
    return alpha_ * nu_ * g * (1.0 - g) * (1.0 - s);
  }
  double dstate_ds(double v_pre, double) const override {
    return -alpha_ * sigmoid(v_pre, nu_, theta_) - beta_;
  }
  double state_init() const override { return 0.1; }
  std::map<std::string, double> parameters() const override {
    return {{"E_s", es_}, {"nu", nu_}, {"theta", theta_},
            {"alpha", alpha_}, {"beta", beta_}};
  }

 private:
  std::string name_;
  double es_, nu_, theta_, alpha_, beta_;
};

// a = V_pre(t - delta): current-based drive for rate units.
class RateLinearSynapse final : public SynapseModel {
 public:
  std::string name() const override { return "rate_linear"; }
  double pre(const Eigen::Ref<const Vector>& xd, int) const override {
    return xd[0];
  }
  void dpre(const Eigen::Ref<const Vector>&, int,
            Eigen::Ref<Vector> grad) const override {
    grad.setZero();
    grad[0] = 1.0;
  }
  double gain(double) const override { return 1.0; }
  double dgain(double) const override { return 0.0; }
  double offset(double) const override { return 0.0; }
  double doffset(double) const override { return 0.0; }
};

}  // namespace

std::shared_ptr<const NodeModel> make_fhn(double eps, double a, double b,
                                          double current) {
  return std::make_shared<FhnModel>(eps, a, b, current);
}
std::shared_ptr<const NodeModel> make_hindmarsh_rose(double a, double b, double c,
                                                     double d, double r, double s,
                                                     double x_rest,
                                                     double current) {
  return std::make_shared<HindmarshRoseModel>(a, b, c, d, r, s, x_rest, current);
}
std::shared_ptr<const NodeModel> make_rate_ei(const std::string& name,
                                              double tau_e, double tau_i,
                                              double w_ee, double w_ei,
                                              double w_ie, double w_ii,
                                              double drive) {
  return std::make_shared<RateEiModel>(name, tau_e, tau_i, w_ee, w_ei, w_ie,
                                       w_ii, drive);
}
std::shared_ptr<const SynapseModel> make_electrical() {
  return std::make_shared<ElectricalSynapse>();
}
std::shared_ptr<const SynapseModel> make_chem_sigmoid(const std::string& name,
                                                      double e_syn, double nu,
                                                      double theta) {
  return std::make_shared<ChemSigmoidSynapse>(name, e_syn, nu, theta);
}
std::shared_ptr<const SynapseModel> make_chem_dynamical(const std::string& name,
                                                        double e_syn, double nu,
                                                        double theta, double alpha,
                                                        double beta) {
  return std::make_shared<ChemDynamicalSynapse>(name, e_syn, nu, theta, alpha,
                                                beta);
}
std::shared_ptr<const SynapseModel> make_rate_linear() {
  return std::make_shared<RateLinearSynapse>();
}

ModelRegistry builtin_models() {
  ModelRegistry reg;
  reg.add_node_model(make_fhn());
  reg.add_node_model(make_hindmarsh_rose());
  reg.add_node_model(make_rate_ei("rate_ei"));
  // Same vector field; the distinct type id marks the node carrying the
  // external-input port (pulse target).
  reg.add_node_model(make_rate_ei("rate_ei_input"));
  reg.add_synapse_model(make_electrical());
  reg.add_synapse_model(make_chem_sigmoid("chem_sigmoid_exc", 3.0, 5.0, 0.0));
  reg.add_synapse_model(make_chem_sigmoid("chem_sigmoid_inh", -3.0, 5.0, 0.0));
  reg.add_synapse_model(make_chem_dynamical("chem_dynamical", 3.0, 5.0, 0.0,
                                            2.0, 0.25));
  reg.add_synapse_model(make_rate_linear());
  return reg;
}

double jacobian_check(const NodeModel& m, std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = m.dim();
  Matrix ja(n, n), jf(n, n);
  Vector x(n), xp(n), xm(n), fp(n), fm(n);
  double worst = 0.0;
  const Vector base = m.typical_state();
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < n; ++i) x[i] = base[i] + u(rng);
    m.jacobian(x, ja);
    for (int j = 0; j < n; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
      xp = x;
      xm = x;
      xp[j] += h;
      xm[j] -= h;
      m.deriv(xp, fp);
      m.deriv(xm, fm);
      jf.col(j) = (fp - fm) / (2 * h);
    }
    const double scale = std::max(1.0, jf.cwiseAbs().maxCoeff());
    worst = std::max(worst, (ja - jf).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

double synapse_derivative_check(const SynapseModel& m, int state_dim,
                                std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int slot = m.dynamical() ? state_dim - 1 : -1;
  Vector xd(state_dim), grad(state_dim), xp(state_dim), xm(state_dim);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < state_dim; ++i) xd[i] = u(rng);
    const double v = u(rng);
    // d_post vs finite difference in v
    const double hv = 1e-6 * std::max(1.0, std::abs(v));
    const double fd_post =
        (m.activation(v + hv, xd, slot) - m.activation(v - hv, xd, slot)) /
        (2 * hv);
    double scale = std::max(1.0, std::abs(fd_post));
    worst = std::max(worst, std::abs(m.d_post(v, xd, slot) - fd_post) / scale);
    // dpre vs finite difference in each delayed component
    m.dpre(xd, slot, grad);
    for (int j = 0; j < state_dim; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(xd[j]));
      xp = xd;
      xm = xd;
      xp[j] += h;
      xm[j] -= h;
      const double fd =
          (m.activation(v, xp, slot) - m.activation(v, xm, slot)) / (2 * h);
      scale = std::max(1.0, std::abs(fd));
      worst = std::max(worst, std::abs(m.gain(v) * grad[j] - fd) / scale);
    }
    if (m.dynamical()) {
      const double s = 0.5 * (u(rng) + 1.0);
      const double hs = 1e-6;
      const double fdv = (m.state_rate(v + hs, s) - m.state_rate(v - hs, s)) / (2 * hs);
      const double fds = (m.state_rate(v, s + hs) - m.state_rate(v, s - hs)) / (2 * hs);
      worst = std::max(worst, std::abs(m.dstate_dv(v, s) - fdv) /
                                  std::max(1.0, std::abs(fdv)));
      worst = std::max(worst, std::abs(m.dstate_ds(v, s) - fds) /
                                  std::max(1.0, std::abs(fds)));
    }
  }
  return worst;
}

}  // namespace csyn
