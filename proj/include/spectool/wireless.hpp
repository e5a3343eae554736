#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spectool/error.hpp"
#include "spectool/mnn.hpp"
#include "spectool/spectrum.hpp"

namespace spectool {

/// How the off-diagonal channel states enter the interference sum.
enum class InterferenceModel {
  kLogState,     ///< |s_ij|^2 of the stored log-domain state
  kLinearGain,   ///< exp(2 s_ij) = (d_ij^{-alpha} h_ij)^2
};

InterferenceModel parse_interference(const std::string& name);
std::string to_string(InterferenceModel m);

/// Ad-hoc network: node positions plus one realization S of the channel
/// states s_ij = ln(d_ij^{-alpha} h_ij), h Rayleigh with scale 2 and d_ii = 1.
/// `log_scale` is a fixed multiplicative perturbation exp(Z) applied to every
/// fading realization (zero for an unperturbed network).
struct WirelessNetwork {
  Eigen::MatrixXd positions;  ///< n x 2, meters
  Eigen::MatrixXd S;
  double P_max = 0.0;
  double p0 = 1.0;
  std::uint64_t fading_seed = 0;
  double region_half_width = 50.0;
  double pathloss_exp = 2.2;
  InterferenceModel interference = InterferenceModel::kLogState;
  Eigen::MatrixXd log_scale;

  Eigen::Index size() const { return positions.rows(); }
};

void validate(const WirelessNetwork& net);

/// ln(d^{-alpha} h).
double link_state(double distance, double fading, double alpha);

/// Rayleigh(scale 2) fading sample from a uniform u in (0, 1].
inline double rayleigh2(double u) { return 2.0 * std::sqrt(-2.0 * std::log(u)); }

/// Uniform positions in [-w, w]^2 with no two nodes closer than 1e-6 m
/// (resampled up to 100 times per node), P_max = n p0 / 2 unless given.
WirelessNetwork generate_network(int n, double region_half_width, double pathloss_exp,
                                 std::uint64_t seed, double p0 = 1.0,
                                 std::optional<double> p_max = {});

/// A fresh fading realization on the network geometry (with its log_scale).
Eigen::MatrixXd draw_channel(const WirelessNetwork& net, std::uint64_t seed);

/// Gain matrix for the rate formula: diagonal |h_ii|^2 = exp(2 s_ii),
/// off-diagonal interference coefficients per `model`.
Eigen::MatrixXd channel_gains(const Eigen::MatrixXd& S, InterferenceModel model);

/// Monte Carlo estimate of sum_i E[log(1 + SINR_i)] over `fading_draws`
/// realizations drawn from `seed`.
double sum_rate(const WirelessNetwork& net, const Eigen::VectorXd& power, int fading_draws,
                std::uint64_t seed);
/// Uses net.fading_seed.
double sum_rate(const WirelessNetwork& net, const Eigen::VectorXd& power, int fading_draws);

/// p0 on the floor(P_max / p0) nodes with the largest direct gain of S.
Eigen::VectorXd baseline_power(const WirelessNetwork& net, const Eigen::MatrixXd& S);

/// Elementwise S exp(Z), Z_ij ~ N(0, sigma^2). sigma = 0 returns the
/// network unchanged.
WirelessNetwork perturb_channel(const WirelessNetwork& net, double sigma, std::uint64_t seed);
/// The Z matrix perturb_channel draws for (n, sigma, seed).
Eigen::MatrixXd lognormal_exponents(Eigen::Index n, double sigma, std::uint64_t seed);

/// Training diverged (non-finite objective).
class TrainingError : public NumericError {
 public:
  using NumericError::NumericError;
};

struct PolicyArch {
  int layers = 2;
  int width = 4;
  int taps = 3;  ///< K polynomial coefficients per filter
  double gamma = 0.1;
  Activation activation = Activation::kTanh;
};

void validate(const PolicyArch& arch);

/// Layer l maps in -> out features; coefficient of lambda^k for the filter
/// from input q to output p is coeffs[(q * out + p) * K + k].
struct PolicyLayer {
  int in_features = 1;
  int out_features = 1;
  std::vector<double> coeffs;
};

/// Graph filter network on the normalized Laplacian of the channel graph
/// followed by a sigmoid head; p = p0 sigmoid(Y w + b).
struct PolicyModel {
  PolicyArch arch;
  std::vector<PolicyLayer> layers;
  Eigen::VectorXd head_w;
  double head_b = 0.0;
  double mu = 0.0;

  Eigen::Index parameter_count() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& theta);
};

void validate(const PolicyModel& model);

/// Random initialization with small coefficients.
PolicyModel init_policy(const PolicyArch& arch, std::uint64_t seed);

/// Spectral data of one channel realization: eigenbasis of the normalized
/// Laplacian of (|S| + |S|^T)/2 (zero diagonal) and the group-averaged
/// powers m_k = mean over the gamma-group of lambda^k. Filters act through
/// sum_k h_k m_k, which is gamma-FRT with zero spread by construction.
struct PolicyGraph {
  Eigen::MatrixXd basis;
  Eigen::VectorXd eigenvalues;
  SpectrumPartition partition;
  std::vector<Eigen::VectorXd> moments;
  Eigen::VectorXd features;  ///< s_ii
};

PolicyGraph make_policy_graph(const Eigen::MatrixXd& S, double gamma, int taps);

/// Effective (projected) response of a coefficient vector on a graph.
Eigen::VectorXd policy_response(const PolicyGraph& g, const double* coeffs, int taps);

/// Group-mean projection of a response (idempotent).
Eigen::VectorXd project_response(const Eigen::VectorXd& response, const SpectrumPartition& part);

/// Allocation probabilities q in (0, 1).
Eigen::VectorXd policy_probabilities(const PolicyModel& model, const PolicyGraph& g);
Eigen::VectorXd policy_power(const PolicyModel& model, const WirelessNetwork& net,
                             const Eigen::MatrixXd& S);

struct LagrangianValue {
  double value = 0.0;     ///< sum_i r_i - mu (sum p - P_max)
  double sum_rate = 0.0;
  double power = 0.0;
  Eigen::VectorXd gradient;  ///< d value / d parameters
};

/// Lagrangian on one realization, with the analytic gradient when requested.
LagrangianValue policy_lagrangian(const PolicyModel& model, const WirelessNetwork& net,
                                  const Eigen::MatrixXd& S, bool with_gradient = true);

struct TrainConfig {
  int iters = 4000;
  double lr = 0.05;
  std::optional<double> lr_dual;  ///< defaults to lr / 10
  int batch = 4;
  std::uint64_t seed = 0;
};

/// Batch means over the iteration's fading draws, plus the same policy
/// scored on the network's stored channel S.
struct TrainPoint {
  int iter = 0;
  double lagrangian = 0.0;
  double sum_rate = 0.0;
  double power = 0.0;
  double mu = 0.0;
  double nominal_sum_rate = 0.0;
  double nominal_power = 0.0;
};

struct TrainResult {
  PolicyModel model;
  std::vector<TrainPoint> curve;
};

/// Primal-dual stochastic ascent with a fresh batch of fading draws per
/// iteration. Throws TrainingError on a non-finite objective.
TrainResult train_policy(const WirelessNetwork& net, const PolicyArch& arch,
                         const TrainConfig& config);

struct Evaluation {
  double policy_rate = 0.0;       ///< relaxed p = p0 q
  double policy_rate_hard = 0.0;  ///< p0 [q > 0.5]
  double baseline_rate = 0.0;
  double policy_power = 0.0;
  double policy_power_hard = 0.0;
  double baseline_power = 0.0;

  double ratio(bool hard = false) const;
};

/// Averages over `draws` realizations from `seed`; policy and baseline see
/// the same draws.
Evaluation evaluate_policy(const WirelessNetwork& net, const PolicyModel& model, int draws,
                           std::uint64_t seed);

struct RobustnessRow {
  int layers = 0;
  int width = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  double ratio_nominal = 0.0;
  double ratio_perturbed = 0.0;
  double difference = 0.0;
};

struct TrainedPolicy {
  PolicyModel model;
  std::uint64_t seed = 0;
};

/// For every model and sigma: sum-rate ratios on the nominal network and on
/// perturb_channel(net, sigma, .), with common fading draws. The evaluation
/// draws and the perturbation depend only on (stream_seed, model seed), so
/// models sharing a seed see the same channels.
std::vector<RobustnessRow> robustness_study(const WirelessNetwork& net,
                                            const std::vector<TrainedPolicy>& models,
                                            const std::vector<double>& sigmas, int draws,
                                            std::uint64_t stream_seed = 0, bool hard = false);

/// Seed of the evaluation draws robustness_study uses for a model seed.
std::uint64_t evaluation_seed(std::uint64_t stream_seed, std::uint64_t model_seed);

struct TrendRow {
  int layers = 0;
  int width = 0;
  double sigma = 0.0;
  double median_difference = 0.0;
  std::size_t samples = 0;
};

/// Median difference over seeds per (L, F, sigma), sorted by (sigma, L, F).
std::vector<TrendRow> robustness_trend(const std::vector<RobustnessRow>& rows);

/// Number of places where `series` decreases.
std::size_t monotonicity_breaks(const std::vector<double>& series);

}  // namespace spectool
