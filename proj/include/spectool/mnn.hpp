#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spectool/filters.hpp"
#include "spectool/spectrum.hpp"

namespace spectool {

/// Pointwise nonlinearities allowed in a network. Every entry is 1-Lipschitz
/// with sigma(0) = 0.
enum class Activation { kRelu, kAbs, kTanh, kIdentity };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

double activate(Activation a, double x);
/// d sigma / dx; 0 at the kink for relu and abs.
double activate_derivative(Activation a, double x);
Eigen::MatrixXd activation_eval(Activation a, const Eigen::MatrixXd& values);

/// n x F feature matrix: one column per feature, one row per sample point.
class Signal {
 public:
  explicit Signal(Eigen::MatrixXd values);
  static Signal from_vector(const Eigen::VectorXd& v) { return Signal(Eigen::MatrixXd(v)); }

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index samples() const { return values_.rows(); }
  Eigen::Index features() const { return values_.cols(); }
  /// Euclidean norm over all samples and features.
  double norm() const { return norm_; }

 private:
  Eigen::MatrixXd values_;
  double norm_;
};

/// Filter bank mapping in_features to out_features. bank[q * out + p] maps
/// input feature q to output feature p.
struct MnnLayer {
  int in_features = 0;
  int out_features = 0;
  std::vector<FilterSpec> bank;

  const FilterSpec& filter(int q, int p) const {
    return bank[static_cast<std::size_t>(q * out_features + p)];
  }
};

struct MnnModel {
  std::vector<int> feature_widths;  ///< F_0 ... F_L
  Activation activation = Activation::kRelu;
  std::vector<MnnLayer> layers;

  int num_layers() const { return static_cast<int>(layers.size()); }
  int input_features() const { return feature_widths.front(); }
  int output_features() const { return feature_widths.back(); }
  std::vector<const FilterSpec*> all_filters() const;
};

void validate(const MnnModel& model);

/// Network with every filter equal to `filter`.
MnnModel uniform_model(const std::vector<int>& widths, Activation act, const FilterSpec& filter);

/// Layer recursion x_l^p = sigma(sum_q h_l^{pq}(L) x_{l-1}^q), evaluated in the
/// eigenbasis of `spec` (one transform per layer shared by the whole bank).
Signal forward(const MnnModel& model, const Spectrum& spec, const Signal& input);

/// ||a - b|| over all samples and features.
double output_distance(const Signal& a, const Signal& b);

}  // namespace spectool
