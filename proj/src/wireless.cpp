#include "spectool/wireless.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include "spectool/kernels.hpp"
#include "spectool/operators.hpp"
#include "spectool/parallel.hpp"
#include "spectool/rng.hpp"

namespace spectool {

InterferenceModel parse_interference(const std::string& name) {
  if (name == "log_state") return InterferenceModel::kLogState;
  if (name == "linear_gain") return InterferenceModel::kLinearGain;
  throw ValidationError("unknown interference model '" + name +
                        "' (expected log_state, linear_gain)");
}

std::string to_string(InterferenceModel m) {
  return m == InterferenceModel::kLogState ? "log_state" : "linear_gain";
}

void validate(const WirelessNetwork& net) {
  const Eigen::Index n = net.size();
  if (n < 2) throw ValidationError("wireless network needs at least 2 nodes");
  if (net.positions.cols() != 2) throw ValidationError("node positions must be n x 2");
  if (net.S.rows() != n || net.S.cols() != n) throw ValidationError("channel matrix S must be n x n");
  if (!net.S.allFinite() || !net.positions.allFinite()) {
    throw ValidationError("wireless network has non-finite entries");
  }
  if (!(net.region_half_width > 0.0)) throw ValidationError("region half-width must be positive");
  if ((net.positions.array().abs() > net.region_half_width).any()) {
    throw ValidationError("node positions lie outside the configured region");
  }
  if (!(net.p0 > 0.0) || !(net.P_max >= 0.0)) throw ValidationError("p0 must be > 0 and P_max >= 0");
  if (!(net.pathloss_exp > 0.0)) throw ValidationError("path-loss exponent must be positive");
  if (net.log_scale.size() != 0 && (net.log_scale.rows() != n || net.log_scale.cols() != n)) {
    throw ValidationError("log_scale must be empty or n x n");
  }
}

double link_state(double distance, double fading, double alpha) {
  if (!(distance > 0.0) || !(fading > 0.0)) {
    throw DomainError("link_state: distance and fading must be positive");
  }
  return std::log(std::pow(distance, -alpha) * fading);
}

WirelessNetwork generate_network(int n, double region_half_width, double pathloss_exp,
                                 std::uint64_t seed, double p0, std::optional<double> p_max) {
  if (n < 2) throw ValidationError("generate_network: n must be >= 2");
  if (!(region_half_width > 0.0)) throw ValidationError("generate_network: region half-width must be > 0");
  if (!(pathloss_exp > 0.0)) throw ValidationError("generate_network: path-loss exponent must be > 0");
  if (!(p0 > 0.0)) throw ValidationError("generate_network: p0 must be > 0");

  WirelessNetwork net;
  net.region_half_width = region_half_width;
  net.pathloss_exp = pathloss_exp;
  net.p0 = p0;
  net.P_max = p_max.value_or(n * p0 / 2.0);
  if (!(net.P_max >= 0.0)) throw ValidationError("generate_network: P_max must be >= 0");
  net.positions.resize(n, 2);

  Rng rng = make_rng(fork_seed(seed, 0));
  std::uniform_real_distribution<double> coord(-region_half_width, region_half_width);
  constexpr int kRetries = 100;
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kRetries && !placed; ++attempt) {
      net.positions(i, 0) = coord(rng);
      net.positions(i, 1) = coord(rng);
      placed = true;
      for (int j = 0; j < i; ++j) {
        if ((net.positions.row(i) - net.positions.row(j)).norm() < 1e-6) {
          placed = false;
          break;
        }
      }
    }
    if (!placed) {
      throw DegeneracyError("generate_network: node " + std::to_string(i) +
                            " coincides with another node after " + std::to_string(kRetries) +
                            " placements");
    }
  }
  net.fading_seed = fork_seed(seed, 1);
  net.S = draw_channel(net, net.fading_seed);
  return net;
}

Eigen::MatrixXd draw_channel(const WirelessNetwork& net, std::uint64_t seed) {
  const Eigen::Index n = net.size();
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = rayleigh2(1.0 - unif(rng));
      const double d = i == j ? 1.0 : (net.positions.row(i) - net.positions.row(j)).norm();
      s(i, j) = std::log(h) - net.pathloss_exp * std::log(d);
    }
  }
  if (net.log_scale.size() != 0) s = s.cwiseProduct(net.log_scale.array().exp().matrix());
  return s;
}

Eigen::MatrixXd channel_gains(const Eigen::MatrixXd& S, InterferenceModel model) {
  Eigen::MatrixXd g(S.rows(), S.cols());
  for (Eigen::Index j = 0; j < S.cols(); ++j) {
    for (Eigen::Index i = 0; i < S.rows(); ++i) {
      const double s = S(i, j);
      if (i == j || model == InterferenceModel::kLinearGain) {
        g(i, j) = std::exp(2.0 * s);
      } else {
        g(i, j) = s * s;
      }
    }
  }
  return g;
}

namespace {

void check_power(const WirelessNetwork& net, const Eigen::VectorXd& p) {
  if (p.size() != net.size()) {
    throw ValidationError("power vector has " + std::to_string(p.size()) + " entries for " +
                          std::to_string(net.size()) + " nodes");
  }
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p(i)) || p(i) < 0.0) {
      throw ValidationError("power of node " + std::to_string(i) + " is negative or non-finite");
    }
  }
}

}  // namespace

double sum_rate(const WirelessNetwork& net, const Eigen::VectorXd& power, int fading_draws,
                std::uint64_t seed) {
  check_power(net, power);
  if (fading_draws < 1) throw ValidationError("sum_rate: fading_draws must be >= 1");
  std::vector<Eigen::MatrixXd> gains(static_cast<std::size_t>(fading_draws));
  for (int d = 0; d < fading_draws; ++d) {
    gains[static_cast<std::size_t>(d)] =
        channel_gains(draw_channel(net, fork_seed(seed, static_cast<std::uint64_t>(d))),
                      net.interference);
  }
  const std::vector<double> rates = kernels::sum_rates(gains, power);
  return std::accumulate(rates.begin(), rates.end(), 0.0) / fading_draws;
}

double sum_rate(const WirelessNetwork& net, const Eigen::VectorXd& power, int fading_draws) {
  return sum_rate(net, power, fading_draws, net.fading_seed);
}

Eigen::VectorXd baseline_power(const WirelessNetwork& net, const Eigen::MatrixXd& S) {
  const Eigen::Index n = net.size();
  const auto k = std::min<Eigen::Index>(
      n, static_cast<Eigen::Index>(std::floor(net.P_max / net.p0 + 1e-9)));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return S(a, a) > S(b, b); });
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < k; ++i) p(order[static_cast<std::size_t>(i)]) = net.p0;
  return p;
}

Eigen::MatrixXd lognormal_exponents(Eigen::Index n, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ValidationError("log-normal sigma must be finite and >= 0");
  }
  if (sigma == 0.0) return Eigen::MatrixXd::Zero(n, n);
  Rng rng = make_rng(fork_seed(seed, 3));
  std::normal_distribution<double> gauss(0.0, sigma);
  Eigen::MatrixXd z(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = gauss(rng);
  }
  return z;
}

WirelessNetwork perturb_channel(const WirelessNetwork& net, double sigma, std::uint64_t seed) {
  const Eigen::MatrixXd z = lognormal_exponents(net.size(), sigma, seed);
  WirelessNetwork out = net;
  if (sigma == 0.0) return out;
  out.S = net.S.cwiseProduct(z.array().exp().matrix());
  out.log_scale = net.log_scale.size() ? Eigen::MatrixXd(net.log_scale + z) : z;
  return out;
}

void validate(const PolicyArch& arch) {
  if (arch.layers < 1) throw ValidationError("policy: layers must be >= 1");
  if (arch.width < 1) throw ValidationError("policy: width must be >= 1");
  if (arch.taps < 1) throw ValidationError("policy: taps must be >= 1");
  if (!(arch.gamma > 0.0 && arch.gamma < 1.0)) throw ValidationError("policy: gamma must lie in (0, 1)");
}

Eigen::Index PolicyModel::parameter_count() const {
  Eigen::Index count = head_w.size() + 1;
  for (const auto& l : layers) count += static_cast<Eigen::Index>(l.coeffs.size());
  return count;
}

Eigen::VectorXd PolicyModel::parameters() const {
  Eigen::VectorXd theta(parameter_count());
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    for (double c : l.coeffs) theta(at++) = c;
  }
  theta.segment(at, head_w.size()) = head_w;
  at += head_w.size();
  theta(at) = head_b;
  return theta;
}

void PolicyModel::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != parameter_count()) {
    throw ValidationError("policy: expected " + std::to_string(parameter_count()) +
                          " parameters, got " + std::to_string(theta.size()));
  }
  Eigen::Index at = 0;
  for (auto& l : layers) {
    for (double& c : l.coeffs) c = theta(at++);
  }
  head_w = theta.segment(at, head_w.size());
  at += head_w.size();
  head_b = theta(at);
}

void validate(const PolicyModel& model) {
  validate(model.arch);
  const auto& a = model.arch;
  if (model.layers.size() != static_cast<std::size_t>(a.layers)) {
    throw ValidationError("policy: layer count does not match the architecture");
  }
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    const int in = l == 0 ? 1 : a.width;
    if (layer.in_features != in || layer.out_features != a.width ||
        layer.coeffs.size() != static_cast<std::size_t>(in * a.width * a.taps)) {
      throw ValidationError("policy: layer " + std::to_string(l + 1) + " has the wrong shape");
    }
    for (double c : layer.coeffs) {
      if (!std::isfinite(c)) throw ValidationError("policy: non-finite filter coefficient");
    }
  }
  if (model.head_w.size() != a.width || !model.head_w.allFinite() || !std::isfinite(model.head_b)) {
    throw ValidationError("policy: head must have one finite weight per feature");
  }
  if (!(model.mu >= 0.0)) throw ValidationError("policy: dual variable must be >= 0");
}

PolicyModel init_policy(const PolicyArch& arch, std::uint64_t seed) {
  validate(arch);
  PolicyModel m;
  m.arch = arch;
  Rng rng = make_rng(seed);
  for (int l = 0; l < arch.layers; ++l) {
    PolicyLayer layer;
    layer.in_features = l == 0 ? 1 : arch.width;
    layer.out_features = arch.width;
    const double a = 1.0 / std::sqrt(static_cast<double>(layer.in_features * arch.taps));
    std::uniform_real_distribution<double> u(-a, a);
    layer.coeffs.resize(static_cast<std::size_t>(layer.in_features * arch.width * arch.taps));
    for (double& c : layer.coeffs) c = u(rng);
    m.layers.push_back(std::move(layer));
  }
  std::uniform_real_distribution<double> u(-1.0 / std::sqrt(arch.width), 1.0 / std::sqrt(arch.width));
  m.head_w.resize(arch.width);
  for (Eigen::Index i = 0; i < arch.width; ++i) m.head_w(i) = u(rng);
  m.head_b = 0.0;
  return m;
}

Eigen::VectorXd project_response(const Eigen::VectorXd& response, const SpectrumPartition& part) {
  Eigen::VectorXd out = response;
  for (const auto& g : part.all_groups()) {
    if (g.count() == 0) continue;
    out.segment(g.start, g.count()).setConstant(response.segment(g.start, g.count()).mean());
  }
  return out;
}

PolicyGraph make_policy_graph(const Eigen::MatrixXd& S, double gamma, int taps) {
  if (S.rows() != S.cols() || S.rows() < 2) throw ValidationError("policy graph: S must be square, n >= 2");
  if (taps < 1) throw ValidationError("policy graph: taps must be >= 1");
  Eigen::MatrixXd adj = S.cwiseAbs();
  adj = 0.5 * (adj + adj.transpose());
  adj.diagonal().setZero();
  const Spectrum spec = eigendecompose(normalized_laplacian(adj));
  PolicyGraph g;
  g.basis = spec.eigenvectors();
  g.eigenvalues = spec.eigenvalues();
  g.partition = gamma_partition(spec, gamma);
  Eigen::VectorXd power = Eigen::VectorXd::Ones(g.eigenvalues.size());
  for (int k = 0; k < taps; ++k) {
    g.moments.push_back(project_response(power, g.partition));
    power = power.cwiseProduct(g.eigenvalues);
  }
  g.features = S.diagonal();
  return g;
}

Eigen::VectorXd policy_response(const PolicyGraph& g, const double* coeffs, int taps) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(g.eigenvalues.size());
  for (int k = 0; k < taps; ++k) r += coeffs[k] * g.moments[static_cast<std::size_t>(k)];
  return r;
}

namespace {

constexpr double kLogitClip = 30.0;

struct ForwardCache {
  std::vector<Eigen::MatrixXd> x_hat;                  // Q^T X_l per layer input
  std::vector<Eigen::MatrixXd> pre;                    // U_l
  std::vector<std::vector<Eigen::VectorXd>> response;  // per layer, per (q, p)
  Eigen::MatrixXd out;                                 // X_L
  Eigen::VectorXd logit;
  Eigen::VectorXd prob;
};

ForwardCache run_forward(const PolicyModel& model, const PolicyGraph& g) {
  const auto& arch = model.arch;
  if (g.moments.size() < static_cast<std::size_t>(arch.taps)) {
    throw ValidationError("policy graph was built with fewer taps than the model uses");
  }
  ForwardCache c;
  Eigen::MatrixXd x = g.features;
  for (const auto& layer : model.layers) {
    const Eigen::MatrixXd x_hat = g.basis.transpose() * x;
    Eigen::MatrixXd u_hat = Eigen::MatrixXd::Zero(x.rows(), layer.out_features);
    std::vector<Eigen::VectorXd> resp;
    for (int q = 0; q < layer.in_features; ++q) {
      for (int p = 0; p < layer.out_features; ++p) {
        const double* h = layer.coeffs.data() + (q * layer.out_features + p) * arch.taps;
        resp.push_back(policy_response(g, h, arch.taps));
        u_hat.col(p) += resp.back().cwiseProduct(x_hat.col(q));
      }
    }
    Eigen::MatrixXd u = g.basis * u_hat;
    x = activation_eval(arch.activation, u);
    c.x_hat.push_back(x_hat);
    c.pre.push_back(std::move(u));
    c.response.push_back(std::move(resp));
  }
  c.out = x;
  c.logit = (x * model.head_w).array() + model.head_b;
  c.prob = c.logit.unaryExpr([](double z) {
    const double t = std::clamp(z, -kLogitClip, kLogitClip);
    return 1.0 / (1.0 + std::exp(-t));
  });
  return c;
}

}  // namespace

Eigen::VectorXd policy_probabilities(const PolicyModel& model, const PolicyGraph& g) {
  return run_forward(model, g).prob;
}

Eigen::VectorXd policy_power(const PolicyModel& model, const WirelessNetwork& net,
                             const Eigen::MatrixXd& S) {
  const PolicyGraph g = make_policy_graph(S, model.arch.gamma, model.arch.taps);
  return net.p0 * policy_probabilities(model, g);
}

LagrangianValue policy_lagrangian(const PolicyModel& model, const WirelessNetwork& net,
                                  const Eigen::MatrixXd& S, bool with_gradient) {
  const auto& arch = model.arch;
  const PolicyGraph g = make_policy_graph(S, arch.gamma, arch.taps);
  const ForwardCache c = run_forward(model, g);
  const Eigen::VectorXd p = net.p0 * c.prob;
  const Eigen::MatrixXd gain = channel_gains(S, net.interference);
  const Eigen::Index n = p.size();

  LagrangianValue out;
  out.sum_rate = kernels::node_rates(gain, p).sum();
  out.power = p.sum();
  out.value = out.sum_rate - model.mu * (out.power - net.P_max);
  if (!with_gradient) return out;

  // d rate / d p through the interference sums I_i = 1 + sum_{j != i} c_ij p_j.
  Eigen::MatrixXd cross = gain;
  cross.diagonal().setZero();
  const Eigen::VectorXd interference = (cross * p).array() + 1.0;
  const Eigen::VectorXd total = interference + gain.diagonal().cwiseProduct(p);
  const Eigen::VectorXd a = total.cwiseInverse() - interference.cwiseInverse();
  Eigen::VectorXd d_p = gain.diagonal().cwiseQuotient(total) + cross.transpose() * a;
  d_p.array() -= model.mu;

  Eigen::VectorXd d_logit(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double q = c.prob(i);
    d_logit(i) = std::abs(c.logit(i)) >= kLogitClip ? 0.0 : d_p(i) * net.p0 * q * (1.0 - q);
  }

  out.gradient.resize(model.parameter_count());
  Eigen::Index head_at = 0;
  for (const auto& l : model.layers) head_at += static_cast<Eigen::Index>(l.coeffs.size());
  out.gradient.segment(head_at, arch.width) = c.out.transpose() * d_logit;
  out.gradient(head_at + arch.width) = d_logit.sum();

  Eigen::MatrixXd d_x = d_logit * model.head_w.transpose();
  Eigen::Index end = head_at;
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const auto& layer = model.layers[li];
    const Eigen::MatrixXd d_u =
        d_x.cwiseProduct(c.pre[li].unaryExpr([&](double v) { return activate_derivative(arch.activation, v); }));
    const Eigen::MatrixXd d_u_hat = g.basis.transpose() * d_u;
    const Eigen::MatrixXd& x_hat = c.x_hat[li];
    Eigen::MatrixXd d_x_hat = Eigen::MatrixXd::Zero(n, layer.in_features);
    const Eigen::Index begin = end - static_cast<Eigen::Index>(layer.coeffs.size());
    for (int q = 0; q < layer.in_features; ++q) {
      for (int pi = 0; pi < layer.out_features; ++pi) {
        const std::size_t f = static_cast<std::size_t>(q * layer.out_features + pi);
        const Eigen::VectorXd prod = d_u_hat.col(pi).cwiseProduct(x_hat.col(q));
        for (int k = 0; k < arch.taps; ++k) {
          out.gradient(begin + static_cast<Eigen::Index>(f) * arch.taps + k) =
              prod.dot(g.moments[static_cast<std::size_t>(k)]);
        }
        d_x_hat.col(q) += c.response[li][f].cwiseProduct(d_u_hat.col(pi));
      }
    }
    if (li > 0) d_x = g.basis * d_x_hat;
    end = begin;
  }
  return out;
}

TrainResult train_policy(const WirelessNetwork& net, const PolicyArch& arch,
                         const TrainConfig& config) {
  validate(net);
  validate(arch);
  if (config.iters < 1) throw ValidationError("train_policy: iters must be >= 1");
  if (config.batch < 1) throw ValidationError("train_policy: batch must be >= 1");
  if (!(config.lr >= 0.0) || !std::isfinite(config.lr)) {
    throw ValidationError("train_policy: learning rate must be finite and >= 0");
  }
  const double lr_dual = config.lr_dual.value_or(config.lr / 10.0);
  if (!(lr_dual >= 0.0) || !std::isfinite(lr_dual)) {
    throw ValidationError("train_policy: dual learning rate must be finite and >= 0");
  }

  TrainResult result;
  result.model = init_policy(arch, fork_seed(config.seed, 0));
  PolicyModel& model = result.model;
  const std::uint64_t draw_root = fork_seed(config.seed, 1);
  result.curve.reserve(static_cast<std::size_t>(config.iters));
  const auto batch = static_cast<std::uint64_t>(config.batch);
  // fixed channel for a noise-free view of progress
  const PolicyGraph nominal = make_policy_graph(net.S, arch.gamma, arch.taps);
  const Eigen::MatrixXd nominal_gain = channel_gains(net.S, net.interference);

  for (int it = 0; it < config.iters; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.parameter_count());
    TrainPoint pt;
    pt.iter = it;
    pt.mu = model.mu;
    {
      const Eigen::VectorXd p = net.p0 * run_forward(model, nominal).prob;
      pt.nominal_sum_rate = kernels::node_rates(nominal_gain, p).sum();
      pt.nominal_power = p.sum();
    }
    for (std::uint64_t b = 0; b < batch; ++b) {
      const Eigen::MatrixXd S =
          draw_channel(net, fork_seed(draw_root, static_cast<std::uint64_t>(it) * batch + b));
      const LagrangianValue v = policy_lagrangian(model, net, S, true);
      if (!std::isfinite(v.value) || !v.gradient.allFinite()) {
        std::ostringstream os;
        os << "training diverged at iteration " << it << " (objective " << v.value << ")";
        throw TrainingError(os.str());
      }
      grad += v.gradient;
      pt.lagrangian += v.value;
      pt.sum_rate += v.sum_rate;
      pt.power += v.power;
    }
    const double inv = 1.0 / config.batch;
    pt.lagrangian *= inv;
    pt.sum_rate *= inv;
    pt.power *= inv;
    result.curve.push_back(pt);
    if (config.lr > 0.0) {
      const Eigen::VectorXd next = model.parameters() + config.lr * inv * grad;
      if (!next.allFinite()) {
        std::ostringstream os;
        os << "training diverged at iteration " << it << " (non-finite parameters)";
        throw TrainingError(os.str());
      }
      model.set_parameters(next);
    }
    model.mu = std::max(0.0, model.mu + lr_dual * (pt.power - net.P_max));
  }
  return result;
}

double Evaluation::ratio(bool hard) const {
  if (!(baseline_rate > 0.0)) throw DomainError("sum-rate ratio undefined: baseline sum rate is 0");
  return (hard ? policy_rate_hard : policy_rate) / baseline_rate;
}

Evaluation evaluate_policy(const WirelessNetwork& net, const PolicyModel& model, int draws,
                           std::uint64_t seed) {
  validate(net);
  validate(model);
  if (draws < 1) throw ValidationError("evaluate_policy: draws must be >= 1");
  std::vector<Evaluation> per(static_cast<std::size_t>(draws));
  parallel_for(draws, [&](std::ptrdiff_t d) {
    const Eigen::MatrixXd S = draw_channel(net, fork_seed(seed, static_cast<std::uint64_t>(d)));
    const Eigen::MatrixXd gain = channel_gains(S, net.interference);
    const Eigen::VectorXd q =
        policy_probabilities(model, make_policy_graph(S, model.arch.gamma, model.arch.taps));
    const Eigen::VectorXd relaxed = net.p0 * q;
    const Eigen::VectorXd hard = (q.array() > 0.5).cast<double>() * net.p0;
    const Eigen::VectorXd base = baseline_power(net, S);
    Evaluation& e = per[static_cast<std::size_t>(d)];
    e.policy_rate = kernels::node_rates(gain, relaxed).sum();
    e.policy_rate_hard = kernels::node_rates(gain, hard).sum();
    e.baseline_rate = kernels::node_rates(gain, base).sum();
    e.policy_power = relaxed.sum();
    e.policy_power_hard = hard.sum();
    e.baseline_power = base.sum();
  });
  Evaluation total;
  for (const auto& e : per) {
    total.policy_rate += e.policy_rate;
    total.policy_rate_hard += e.policy_rate_hard;
    total.baseline_rate += e.baseline_rate;
    total.policy_power += e.policy_power;
    total.policy_power_hard += e.policy_power_hard;
    total.baseline_power += e.baseline_power;
  }
  const double inv = 1.0 / draws;
  total.policy_rate *= inv;
  total.policy_rate_hard *= inv;
  total.baseline_rate *= inv;
  total.policy_power *= inv;
  total.policy_power_hard *= inv;
  total.baseline_power *= inv;
  return total;
}

std::uint64_t evaluation_seed(std::uint64_t stream_seed, std::uint64_t model_seed) {
  return fork_seed(fork_seed(stream_seed, model_seed), 4);
}

std::vector<RobustnessRow> robustness_study(const WirelessNetwork& net,
                                            const std::vector<TrainedPolicy>& models,
                                            const std::vector<double>& sigmas, int draws,
                                            std::uint64_t stream_seed, bool hard) {
  if (models.empty() || sigmas.empty()) throw ValidationError("robustness study: empty grid");
  for (double s : sigmas) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("robustness study: sigma must be >= 0");
  }
  const std::size_t n_sigma = sigmas.size();
  std::vector<RobustnessRow> rows(models.size() * n_sigma);
  const auto jobs = static_cast<std::ptrdiff_t>(models.size());
  parallel_for(jobs, [&](std::ptrdiff_t m) {
    const TrainedPolicy& tp = models[static_cast<std::size_t>(m)];
    const std::uint64_t eval_seed = evaluation_seed(stream_seed, tp.seed);
    const std::uint64_t z_seed = fork_seed(fork_seed(stream_seed, tp.seed), 5);
    const double nominal = evaluate_policy(net, tp.model, draws, eval_seed).ratio(hard);
    for (std::size_t s = 0; s < n_sigma; ++s) {
      const WirelessNetwork pert = perturb_channel(net, sigmas[s], z_seed);
      const double perturbed =
          sigmas[s] == 0.0 ? nominal : evaluate_policy(pert, tp.model, draws, eval_seed).ratio(hard);
      RobustnessRow& r = rows[static_cast<std::size_t>(m) * n_sigma + s];
      r.layers = tp.model.arch.layers;
      r.width = tp.model.arch.width;
      r.sigma = sigmas[s];
      r.seed = tp.seed;
      r.ratio_nominal = nominal;
      r.ratio_perturbed = perturbed;
      r.difference = std::abs(nominal - perturbed);
    }
  });
  return rows;
}

std::vector<TrendRow> robustness_trend(const std::vector<RobustnessRow>& rows) {
  std::map<std::tuple<double, int, int>, std::vector<double>> buckets;
  for (const auto& r : rows) buckets[{r.sigma, r.layers, r.width}].push_back(r.difference);
  std::vector<TrendRow> out;
  for (auto& [key, vals] : buckets) {
    std::sort(vals.begin(), vals.end());
    const std::size_t m = vals.size();
    TrendRow t;
    std::tie(t.sigma, t.layers, t.width) = key;
    t.samples = m;
    t.median_difference = m % 2 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
    out.push_back(t);
  }
  return out;
}

std::size_t monotonicity_breaks(const std::vector<double>& series) {
  std::size_t breaks = 0;
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i] < series[i - 1]) ++breaks;
  }
  return breaks;
}

}  // namespace spectool
