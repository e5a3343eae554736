#include "spectool/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "spectool/error.hpp"

namespace spectool::serial {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

namespace {

Json group_range(const SpectrumGroup& g) { return Json::array({g.start, g.end}); }

}  // namespace

Json to_json(const SymmetricOperator& op) {
  Json j;
  j["n"] = op.size();
  j["values"] = matrix_to_json(op.matrix());
  j["symmetry_tol"] = op.symmetry_tol();
  return j;
}

Json to_json(const SpectrumPartition& p) {
  Json j;
  j["gamma"] = p.gamma;
  j["M"] = p.M();
  Json groups = Json::array();
  Json bounds = Json::array();
  for (const auto& g : p.groups) {
    groups.push_back(group_range(g));
    bounds.push_back(Json::array({g.lo, g.hi}));
  }
  j["groups"] = std::move(groups);
  j["bounds"] = std::move(bounds);
  if (p.zero_group) {
    j["zero_group"] = group_range(*p.zero_group);
    j["zero_bounds"] = Json::array({p.zero_group->lo, p.zero_group->hi});
  } else {
    j["zero_group"] = nullptr;
  }
  j["zero_threshold"] = p.zero_threshold;
  return j;
}

Json to_json(const FilterSpec& f) {
  Json j;
  if (const auto* poly = std::get_if<PolynomialFilter>(&f.form)) {
    j["form"] = "polynomial";
    j["coeffs"] = poly->coeffs;
  } else {
    const auto& pw = std::get<PiecewiseFilter>(f.form);
    j["form"] = "piecewise";
    j["partition"] = to_json(pw.partition);
    j["values"] = pw.values;
    j["off_group"] = pw.off_group == OffGroupRule::kStrict ? "strict" : "interpolate";
  }
  j["non_amplifying"] = f.non_amplifying;
  return j;
}

Json to_json(const MnnModel& m) {
  Json j;
  j["feature_widths"] = m.feature_widths;
  j["activation"] = to_string(m.activation);
  Json layers = Json::array();
  for (const auto& l : m.layers) {
    Json bank = Json::array();
    for (const auto& f : l.bank) bank.push_back(to_json(f));
    layers.push_back(std::move(bank));
  }
  j["layers"] = std::move(layers);
  return j;
}

Json to_json(const PerturbationSpec& p) {
  Json j;
  j["family"] = to_string(p.family);
  j["epsilon"] = p.epsilon;
  j["seed"] = p.seed;
  return j;
}

Json to_json(const WirelessNetwork& net) {
  Json j;
  j["positions"] = matrix_to_json(net.positions);
  j["S"] = matrix_to_json(net.S);
  j["P_max"] = net.P_max;
  j["p0"] = net.p0;
  j["fading_seed"] = net.fading_seed;
  j["region_half_width"] = net.region_half_width;
  j["pathloss_exp"] = net.pathloss_exp;
  j["interference"] = to_string(net.interference);
  if (net.log_scale.size()) j["log_scale"] = matrix_to_json(net.log_scale);
  return j;
}

Json to_json(const PolicyModel& m) {
  Json j;
  j["arch"] = {{"layers", m.arch.layers},
               {"width", m.arch.width},
               {"taps", m.arch.taps},
               {"gamma", m.arch.gamma},
               {"activation", to_string(m.arch.activation)}};
  Json layers = Json::array();
  for (const auto& l : m.layers) {
    layers.push_back({{"in_features", l.in_features},
                      {"out_features", l.out_features},
                      {"coeffs", l.coeffs}});
  }
  j["layers"] = std::move(layers);
  j["head_w"] = vector_to_json(m.head_w);
  j["head_b"] = m.head_b;
  j["mu"] = m.mu;
  return j;
}

void Node::fail(const std::string& message) const { throw UsageError("config " + path_ + ": " + message); }

bool Node::has(const std::string& key) const {
  return value_->is_object() && value_->contains(key) && !(*value_)[key].is_null();
}

Node Node::at(const std::string& key) const {
  if (!value_->is_object()) fail("expected an object");
  auto it = value_->find(key);
  if (it == value_->end()) throw UsageError("config " + path_ + "." + key + ": missing required field");
  return Node(*it, path_ + "." + key);
}

Node Node::at(std::size_t index) const {
  if (!value_->is_array()) fail("expected an array");
  if (index >= value_->size()) fail("index " + std::to_string(index) + " out of range");
  return Node((*value_)[index], path_ + "[" + std::to_string(index) + "]");
}

std::size_t Node::size() const {
  if (!value_->is_array()) fail("expected an array");
  return value_->size();
}

void Node::allow_only(std::initializer_list<const char*> allowed) const {
  if (!value_->is_object()) fail("expected an object");
  for (auto it = value_->begin(); it != value_->end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) throw UsageError("config " + path_ + "." + it.key() + ": unknown field");
  }
}

double Node::number() const {
  if (!value_->is_number()) fail("expected a number");
  const double v = value_->get<double>();
  if (!std::isfinite(v)) fail("expected a finite number");
  return v;
}

long long Node::integer() const {
  if (value_->is_number_integer()) return value_->get<long long>();
  if (value_->is_number_float()) {
    const double v = value_->get<double>();
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9e15) return static_cast<long long>(v);
  }
  fail("expected an integer");
}

std::uint64_t Node::seed() const {
  if (value_->is_number_unsigned()) return value_->get<std::uint64_t>();
  const long long v = integer();
  if (v < 0) fail("seed must be >= 0");
  return static_cast<std::uint64_t>(v);
}

bool Node::boolean() const {
  if (!value_->is_boolean()) fail("expected true or false");
  return value_->get<bool>();
}

std::string Node::string() const {
  if (!value_->is_string()) fail("expected a string");
  return value_->get<std::string>();
}

std::vector<double> Node::numbers() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
  return out;
}

Eigen::MatrixXd Node::matrix() const {
  const std::size_t rows = size();
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const std::size_t cols = at(0).size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const Node row = at(i);
    if (row.size() != cols) row.fail("ragged matrix row");
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row.at(j).number();
    }
  }
  return m;
}

Eigen::VectorXd Node::vector() const {
  const std::vector<double> v = numbers();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double Node::number(const std::string& key, double fallback) const {
  return has(key) ? at(key).number() : fallback;
}

long long Node::integer(const std::string& key, long long fallback) const {
  return has(key) ? at(key).integer() : fallback;
}

std::string Node::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? at(key).string() : fallback;
}

bool Node::boolean(const std::string& key, bool fallback) const {
  return has(key) ? at(key).boolean() : fallback;
}

std::optional<double> Node::optional_number(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return at(key).number();
}

namespace {

// Library validation errors are re-raised with the document path.
template <typename F>
auto with_path(const Node& n, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    n.fail(e.what());
  }
}

SpectrumGroup group_from(const Node& range, const Node* bounds) {
  if (range.size() != 2) range.fail("expected [start, end]");
  SpectrumGroup g;
  g.start = range.at(0).integer();
  g.end = range.at(1).integer();
  if (g.start < 0 || g.end <= g.start) range.fail("group must satisfy 0 <= start < end");
  if (bounds) {
    if (bounds->size() != 2) bounds->fail("expected [lo, hi]");
    g.lo = bounds->at(0).number();
    g.hi = bounds->at(1).number();
  }
  return g;
}

}  // namespace

SymmetricOperator operator_from_json(const Node& n) {
  n.allow_only({"n", "values", "symmetry_tol"});
  const Eigen::MatrixXd values = n.at("values").matrix();
  if (n.has("n") && n.at("n").integer() != values.rows()) n.fail("n does not match the matrix size");
  const double tol = n.number("symmetry_tol", 1e-12);
  return with_path(n, [&] { return SymmetricOperator(values, tol); });
}

SpectrumPartition partition_from_json(const Node& n) {
  n.allow_only({"gamma", "M", "groups", "bounds", "zero_group", "zero_bounds", "zero_threshold"});
  SpectrumPartition p;
  p.gamma = n.at("gamma").number();
  const Node groups = n.at("groups");
  const bool has_bounds = n.has("bounds");
  if (has_bounds && n.at("bounds").size() != groups.size()) n.fail("bounds and groups differ in length");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    std::optional<Node> b;
    if (has_bounds) b = n.at("bounds").at(i);
    p.groups.push_back(group_from(groups.at(i), b ? &*b : nullptr));
  }
  if (n.has("zero_group")) {
    std::optional<Node> b;
    if (n.has("zero_bounds")) b = n.at("zero_bounds");
    p.zero_group = group_from(n.at("zero_group"), b ? &*b : nullptr);
  }
  p.zero_threshold = n.number("zero_threshold", 0.0);
  Eigen::Index expect = p.zero_group ? p.zero_group->end : 0;
  for (const auto& g : p.groups) {
    if (g.start != expect) n.fail("groups must be contiguous and ordered");
    expect = g.end;
  }
  if (n.has("M") && static_cast<std::size_t>(n.at("M").integer()) != p.M()) {
    n.fail("M does not match the number of groups");
  }
  return p;
}

FilterSpec filter_from_json(const Node& n) {
  const std::string form = n.at("form").string();
  FilterSpec f;
  if (form == "polynomial") {
    n.allow_only({"form", "coeffs", "non_amplifying"});
    f.form = PolynomialFilter{n.at("coeffs").numbers()};
  } else if (form == "piecewise") {
    n.allow_only({"form", "partition", "values", "off_group", "non_amplifying"});
    PiecewiseFilter pw;
    pw.partition = partition_from_json(n.at("partition"));
    pw.values = n.at("values").numbers();
    const std::string rule = n.string("off_group", "strict");
    if (rule == "strict") {
      pw.off_group = OffGroupRule::kStrict;
    } else if (rule == "interpolate") {
      pw.off_group = OffGroupRule::kInterpolate;
    } else {
      n.at("off_group").fail("expected strict or interpolate");
    }
    f.form = std::move(pw);
  } else {
    n.at("form").fail("expected polynomial or piecewise");
  }
  f.non_amplifying = n.boolean("non_amplifying", false);
  with_path(n, [&] { validate(f); });
  return f;
}

MnnModel model_from_json(const Node& n) {
  n.allow_only({"feature_widths", "activation", "layers"});
  MnnModel m;
  const Node widths = n.at("feature_widths");
  for (std::size_t i = 0; i < widths.size(); ++i) {
    m.feature_widths.push_back(static_cast<int>(widths.at(i).integer()));
  }
  m.activation = with_path(n.at("activation"), [&] { return parse_activation(n.at("activation").string()); });
  const Node layers = n.at("layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l + 1 >= m.feature_widths.size()) layers.fail("more layers than feature widths allow");
    MnnLayer layer{m.feature_widths[l], m.feature_widths[l + 1], {}};
    const Node bank = layers.at(l);
    for (std::size_t k = 0; k < bank.size(); ++k) layer.bank.push_back(filter_from_json(bank.at(k)));
    m.layers.push_back(std::move(layer));
  }
  with_path(n, [&] { validate(m); });
  return m;
}

PerturbationSpec perturbation_from_json(const Node& n) {
  n.allow_only({"family", "epsilon", "seed"});
  PerturbationSpec p;
  p.family = with_path(n.at("family"), [&] { return parse_family(n.at("family").string()); });
  p.epsilon = n.at("epsilon").number();
  if (p.epsilon < 0.0) n.at("epsilon").fail("must be >= 0");
  p.seed = n.has("seed") ? n.at("seed").seed() : 0;
  return p;
}

WirelessNetwork network_from_json(const Node& n) {
  n.allow_only({"positions", "S", "P_max", "p0", "fading_seed", "region_half_width", "pathloss_exp",
                "interference", "log_scale"});
  WirelessNetwork net;
  net.positions = n.at("positions").matrix();
  net.S = n.at("S").matrix();
  net.P_max = n.at("P_max").number();
  net.p0 = n.at("p0").number();
  net.fading_seed = n.has("fading_seed") ? n.at("fading_seed").seed() : 0;
  net.region_half_width = n.number("region_half_width", 50.0);
  net.pathloss_exp = n.number("pathloss_exp", 2.2);
  net.interference = with_path(n, [&] { return parse_interference(n.string("interference", "log_state")); });
  if (n.has("log_scale")) net.log_scale = n.at("log_scale").matrix();
  with_path(n, [&] { validate(net); });
  return net;
}

PolicyModel policy_from_json(const Node& n) {
  n.allow_only({"arch", "layers", "head_w", "head_b", "mu"});
  PolicyModel m;
  const Node a = n.at("arch");
  a.allow_only({"layers", "width", "taps", "gamma", "activation"});
  m.arch.layers = static_cast<int>(a.at("layers").integer());
  m.arch.width = static_cast<int>(a.at("width").integer());
  m.arch.taps = static_cast<int>(a.at("taps").integer());
  m.arch.gamma = a.at("gamma").number();
  m.arch.activation = with_path(a, [&] { return parse_activation(a.string("activation", "tanh")); });
  const Node layers = n.at("layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Node ln = layers.at(l);
    ln.allow_only({"in_features", "out_features", "coeffs"});
    PolicyLayer layer;
    layer.in_features = static_cast<int>(ln.at("in_features").integer());
    layer.out_features = static_cast<int>(ln.at("out_features").integer());
    layer.coeffs = ln.at("coeffs").numbers();
    m.layers.push_back(std::move(layer));
  }
  m.head_w = n.at("head_w").vector();
  m.head_b = n.at("head_b").number();
  m.mu = n.number("mu", 0.0);
  with_path(n, [&] { validate(m); });
  return m;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in, nullptr, true, false);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& value) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << value.dump(2) << '\n';
  if (!out) throw NumericError("write failed for '" + path.string() + "'");
}

}  // namespace spectool::serial
