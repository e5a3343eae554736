#include "spectool/mnn.hpp"

#include <cmath>
#include <sstream>

#include "spectool/error.hpp"

namespace spectool {

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "abs") return Activation::kAbs;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw ValidationError("unknown activation '" + name + "' (expected relu, abs, tanh, identity)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kAbs: return "abs";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "identity";
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kAbs: return std::abs(x);
    case Activation::kTanh: return std::tanh(x);
    case Activation::kIdentity: return x;
  }
  return x;
}

double activate_derivative(Activation a, double x) {
  switch (a) {
    case Activation::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::kAbs: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case Activation::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

Eigen::MatrixXd activation_eval(Activation a, const Eigen::MatrixXd& values) {
  return values.unaryExpr([a](double x) { return activate(a, x); });
}

Signal::Signal(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.cols() < 1) throw ValidationError("signal needs at least one feature");
  if (!values_.allFinite()) throw ValidationError("signal has non-finite entries");
  norm_ = values_.norm();
}

std::vector<const FilterSpec*> MnnModel::all_filters() const {
  std::vector<const FilterSpec*> out;
  for (const auto& l : layers) {
    for (const auto& f : l.bank) out.push_back(&f);
  }
  return out;
}

void validate(const MnnModel& model) {
  const auto& w = model.feature_widths;
  if (w.size() < 2) throw ValidationError("model needs at least one layer (two feature widths)");
  if (model.layers.size() + 1 != w.size()) {
    throw ValidationError("model has " + std::to_string(model.layers.size()) + " layers but " +
                          std::to_string(w.size()) + " feature widths");
  }
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    if (w[l] < 1 || w[l + 1] < 1) throw ValidationError("feature widths must be >= 1");
    if (layer.in_features != w[l] || layer.out_features != w[l + 1] ||
        layer.bank.size() != static_cast<std::size_t>(w[l] * w[l + 1])) {
      std::ostringstream os;
      os << "layer " << l + 1 << " bank is " << layer.in_features << "x" << layer.out_features
         << " with " << layer.bank.size() << " filters; expected " << w[l] << "x" << w[l + 1];
      throw ValidationError(os.str());
    }
    for (const auto& f : layer.bank) validate(f);
  }
}

MnnModel uniform_model(const std::vector<int>& widths, Activation act, const FilterSpec& filter) {
  MnnModel m;
  m.feature_widths = widths;
  m.activation = act;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    MnnLayer layer{widths[l], widths[l + 1], {}};
    layer.bank.assign(static_cast<std::size_t>(widths[l] * widths[l + 1]), filter);
    m.layers.push_back(std::move(layer));
  }
  validate(m);
  return m;
}

Signal forward(const MnnModel& model, const Spectrum& spec, const Signal& input) {
  validate(model);
  const Eigen::MatrixXd& q = spec.eigenvectors();
  if (input.features() != model.input_features()) {
    std::ostringstream os;
    os << "forward: input has " << input.features() << " features, model expects "
       << model.input_features();
    throw ValidationError(os.str());
  }
  if (input.samples() != q.rows()) {
    std::ostringstream os;
    os << "forward: input has " << input.samples() << " samples, spectrum dimension is "
       << q.rows();
    throw ValidationError(os.str());
  }
  const Eigen::VectorXd& lambdas = spec.eigenvalues();
  Eigen::MatrixXd x = input.values();
  for (const auto& layer : model.layers) {
    const Eigen::MatrixXd coeffs = q.transpose() * x;
    Eigen::MatrixXd out_hat = Eigen::MatrixXd::Zero(q.cols(), layer.out_features);
    for (int qi = 0; qi < layer.in_features; ++qi) {
      for (int p = 0; p < layer.out_features; ++p) {
        const FilterSpec& f = layer.filter(qi, p);
        const Eigen::VectorXd r = frequency_response(f, lambdas);
        if (f.non_amplifying && r.size() && !(r.cwiseAbs().maxCoeff() < 1.0)) {
          throw ValidationError("forward: filter flagged non-amplifying has |h(lambda)| >= 1");
        }
        out_hat.col(p) += r.cwiseProduct(coeffs.col(qi));
      }
    }
    x = activation_eval(model.activation, q * out_hat);
  }
  return Signal(std::move(x));
}

double output_distance(const Signal& a, const Signal& b) {
  if (a.samples() != b.samples() || a.features() != b.features()) {
    throw ValidationError("output_distance: signal shapes differ");
  }
  return (a.values() - b.values()).norm();
}

}  // namespace spectool
