#include "spectool/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <random>

#include "spectool/error.hpp"
#include "spectool/filters.hpp"
#include "spectool/io.hpp"
#include "spectool/kernels.hpp"
#include "spectool/operators.hpp"
#include "spectool/parallel.hpp"
#include "spectool/rng.hpp"
#include "spectool/serialize.hpp"
#include "spectool/spectrum.hpp"
#include "spectool/stability.hpp"
#include "spectool/wireless.hpp"

namespace spectool::cli {

namespace fs = std::filesystem;
using serial::Json;
using serial::Node;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Where the operator (or analytic spectrum) of a run comes from.
struct OperatorInput {
  std::optional<AnalyticManifold> manifold;
  std::optional<fs::path> point_cloud;
  std::optional<fs::path> file;
  int manifold_dim = 1;
  Eigen::Index samples = 500;
  bool analytic = false;
  std::optional<double> bandwidth;
  std::optional<int> knn;
};

AnalyticManifold parse_manifold(const Node& n) {
  const std::string kind = n.at("manifold").string();
  if (kind == "circle") return Circle{n.number("radius", 1.0)};
  if (kind == "sphere") return Sphere{n.number("radius", 1.0)};
  if (kind == "torus") return FlatTorus{n.number("r1", 1.0), n.number("r2", 1.0)};
  n.at("manifold").fail("expected circle, sphere or torus");
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  return p.is_absolute() ? p : base / p;
}

OperatorInput parse_operator(const Node& n, const fs::path& base) {
  n.allow_only({"manifold", "radius", "r1", "r2", "samples", "point_cloud", "manifold_dim", "analytic",
                "bandwidth", "knn", "file"});
  OperatorInput in;
  const int sources = n.has("manifold") + n.has("point_cloud") + n.has("file");
  if (sources != 1) n.fail("give exactly one of manifold, point_cloud, file");
  if (n.has("manifold")) {
    in.manifold = parse_manifold(n);
    try {
      validate(*in.manifold);
    } catch (const ValidationError& e) {
      n.fail(e.what());
    }
    in.manifold_dim = manifold_dimension(*in.manifold);
  }
  if (n.has("point_cloud")) {
    in.point_cloud = resolve(n.at("point_cloud").string(), base);
    in.manifold_dim = static_cast<int>(n.at("manifold_dim").integer());
  }
  if (n.has("file")) in.file = resolve(n.at("file").string(), base);
  in.analytic = n.boolean("analytic", false);
  if (in.analytic && !in.manifold) n.at("analytic").fail("analytic spectra need a manifold");
  in.samples = n.integer("samples", 500);
  if (in.samples < 2) n.at("samples").fail("must be >= 2");
  in.bandwidth = n.optional_number("bandwidth");
  if (n.has("knn")) in.knn = static_cast<int>(n.at("knn").integer());
  return in;
}

struct BuiltOperator {
  SymmetricOperator op;
  std::optional<double> bandwidth;
};

BuiltOperator build_operator(const OperatorInput& in, std::uint64_t seed) {
  if (in.file) {
    const Json j = serial::read_json_file(*in.file);
    return {serial::operator_from_json(Node(j, "$")), std::nullopt};
  }
  const PointCloud cloud = in.point_cloud ? read_point_cloud_csv(*in.point_cloud, in.manifold_dim)
                                          : sample_manifold(*in.manifold, in.samples, seed);
  KernelLaplacian k = kernel_laplacian_detailed(cloud, in.bandwidth, KernelMode{in.knn});
  return {std::move(k.op), k.bandwidth};
}

std::uint64_t run_seed(const RunOptions& opts, const Node& root) {
  if (opts.seed) return *opts.seed;
  return root.has("seed") ? root.at("seed").seed() : 0;
}

using Outputs = std::vector<std::string>;

// ---------------------------------------------------------------- spectrum

Outputs cmd_spectrum(const RunOptions& opts, const Node& root, std::uint64_t seed) {
  root.allow_only({"operator", "gamma", "eigenvalues", "gap_threshold", "seed"});
  const OperatorInput in = parse_operator(root.at("operator"), opts.config.parent_path());
  const double gamma = root.at("gamma").number();
  if (!(gamma > 0.0 && gamma < 1.0)) root.at("gamma").fail("must lie in (0, 1)");
  const double threshold = root.number("gap_threshold", 0.1);
  std::optional<Eigen::Index> count;
  if (root.has("eigenvalues")) {
    count = root.at("eigenvalues").integer();
    if (*count < 1) root.at("eigenvalues").fail("must be >= 1");
  }

  std::optional<Spectrum> spec;
  std::optional<double> bandwidth;
  if (in.analytic) {
    spec = analytic_spectrum(*in.manifold, count.value_or(50));
  } else {
    BuiltOperator built = build_operator(in, seed);
    bandwidth = built.bandwidth;
    if (count && *count > built.op.size()) {
      root.at("eigenvalues").fail("exceeds the operator size " + std::to_string(built.op.size()));
    }
    spec = eigendecompose(built.op, count);
  }
  const SpectrumPartition part = gamma_partition(*spec, gamma);
  const auto group_of = part.group_of_index();

  {
    io::CsvWriter csv(opts.out / "eigenvalues.csv", {"index", "eigenvalue", "group"});
    for (Eigen::Index i = 0; i < spec->size(); ++i) {
      csv.cell(static_cast<long long>(i)).cell(spec->eigenvalue(i)).cell(group_of[static_cast<std::size_t>(i)]);
      csv.end_row();
    }
  }
  serial::write_json_file(opts.out / "partition.json", serial::to_json(part));

  std::vector<double> profile;
  std::vector<double> positive;
  for (Eigen::Index i = 0; i < spec->size(); ++i) {
    if (spec->eigenvalue(i) > part.zero_threshold) positive.push_back(spec->eigenvalue(i));
  }
  if (positive.size() >= 2) profile = gap_ratio_profile(*spec);
  {
    io::CsvWriter csv(opts.out / "gap_profile.csv", {"k", "lambda_k", "lambda_next", "gap_ratio"});
    for (std::size_t k = 0; k < profile.size(); ++k) {
      csv.cell(k).cell(positive[k]).cell(positive[k + 1]).cell(profile[k]);
      csv.end_row();
    }
  }
  const auto cutoff = profile.empty() ? std::nullopt : gap_cutoff(profile, threshold);

  Json summary;
  summary["source"] = in.analytic ? "analytic" : (in.file ? "operator_file" : "kernel_laplacian");
  summary["count"] = spec->size();
  summary["gamma"] = gamma;
  summary["M"] = part.M();
  summary["zero_group_size"] = part.zero_group ? part.zero_group->count() : 0;
  summary["partition_verified"] = verify_partition(spec->eigenvalues(), part);
  summary["gap_threshold"] = threshold;
  summary["gap_cutoff"] = cutoff ? Json(*cutoff) : Json(nullptr);
  summary["bandwidth"] = bandwidth ? Json(*bandwidth) : Json(nullptr);
  serial::write_json_file(opts.out / "summary.json", summary);
  return {"eigenvalues.csv", "partition.json", "gap_profile.csv", "summary.json"};
}

// ---------------------------------------------------------------- stability

Eigen::VectorXd make_input(const Node* n, const Spectrum& spec, std::uint64_t seed) {
  const Eigen::Index dim = spec.dimension();
  std::string kind = "random";
  double norm = 1.0;
  std::uint64_t input_seed = fork_seed(seed, 31);
  Eigen::Index index = 1;
  if (n) {
    n->allow_only({"kind", "norm", "seed", "index"});
    kind = n->string("kind", "random");
    norm = n->number("norm", 1.0);
    if (!(norm > 0.0)) n->at("norm").fail("must be positive");
    if (n->has("seed")) input_seed = n->at("seed").seed();
    index = n->integer("index", 1);
  }
  Eigen::VectorXd f(dim);
  if (kind == "random") {
    Rng rng = make_rng(input_seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (Eigen::Index i = 0; i < dim; ++i) f(i) = g(rng);
  } else if (kind == "constant") {
    f.setOnes();
  } else if (kind == "eigenvector") {
    if (index < 0 || index >= spec.size()) n->at("index").fail("eigenvector index out of range");
    f = spec.eigenvectors().col(index);
  } else {
    n->at("kind").fail("expected random, constant or eigenvector");
  }
  return f * (norm / f.norm());
}

Outputs cmd_stability(const RunOptions& opts, const Node& root, std::uint64_t seed) {
  root.allow_only({"operator", "gamma", "epsilons", "layers", "width", "architectures", "lipschitz_b",
                   "trials", "families", "family", "mode", "activation", "recipe", "input", "seed"});
  const OperatorInput in = parse_operator(root.at("operator"), opts.config.parent_path());
  if (in.analytic) root.at("operator").fail("the stability sweep needs a discrete operator");

  StabilityConfig config;
  config.gamma = root.at("gamma").number();
  config.epsilons = root.at("epsilons").numbers();
  config.layers = static_cast<int>(root.integer("layers", 1));
  config.width = static_cast<int>(root.integer("width", 1));
  config.lipschitz_b = root.optional_number("lipschitz_b");
  config.trials = static_cast<int>(root.integer("trials", 1));
  config.seed = seed;
  const std::string mode = root.string("mode", "literal");
  if (mode == "literal") {
    config.mode = RelativeMode::kLiteral;
  } else if (mode == "symmetrized") {
    config.mode = RelativeMode::kSymmetrized;
  } else {
    root.at("mode").fail("expected literal or symmetrized");
  }
  try {
    config.activation = parse_activation(root.string("activation", "relu"));
  } catch (const ValidationError& e) {
    root.at("activation").fail(e.what());
  }
  config.recipe.seed = fork_seed(seed, 21);
  if (root.has("recipe")) {
    const Node r = root.at("recipe");
    r.allow_only({"kind", "seed", "amplitude", "cutoff"});
    try {
      config.recipe.kind = parse_recipe_kind(r.string("kind", "random_piecewise"));
    } catch (const ValidationError& e) {
      r.at("kind").fail(e.what());
    }
    if (r.has("seed")) config.recipe.seed = r.at("seed").seed();
    config.recipe.amplitude = r.number("amplitude", config.recipe.amplitude);
    config.recipe.cutoff = r.number("cutoff", config.recipe.cutoff);
  }

  std::vector<std::pair<int, int>> archs;
  if (root.has("architectures")) {
    const Node a = root.at("architectures");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Node pair = a.at(i);
      if (pair.size() != 2) pair.fail("expected [L, F]");
      archs.emplace_back(static_cast<int>(pair.at(0).integer()), static_cast<int>(pair.at(1).integer()));
      if (archs.back().first < 1 || archs.back().second < 1) pair.fail("L and F must be >= 1");
    }
    if (archs.empty()) a.fail("needs at least one architecture");
  } else {
    archs.emplace_back(config.layers, config.width);
  }

  std::vector<PerturbationFamily> families;
  try {
    if (root.has("families")) {
      const Node f = root.at("families");
      for (std::size_t i = 0; i < f.size(); ++i) families.push_back(parse_family(f.at(i).string()));
    } else {
      families.push_back(parse_family(root.string("family", "eigenbasis_diagonal")));
    }
  } catch (const ValidationError& e) {
    root.fail(e.what());
  }
  if (families.empty()) root.at("families").fail("needs at least one family");

  validate(config);

  const BuiltOperator built = build_operator(in, seed);
  const Spectrum spec = eigendecompose(built.op);
  const std::optional<Node> input_node =
      root.has("input") ? std::optional<Node>(root.at("input")) : std::nullopt;
  const Signal input = Signal::from_vector(make_input(input_node ? &*input_node : nullptr, spec, seed));

  Json summary;
  summary["gamma"] = config.gamma;
  summary["epsilons"] = config.epsilons;
  summary["trials"] = config.trials;
  summary["f_norm"] = input.norm();
  summary["recipe"] = to_string(config.recipe.kind);
  Json per_family = Json::array();
  std::size_t violations = 0;
  std::size_t rows = 0;
  double worst_ratio = 0.0;
  {
    io::CsvWriter csv(opts.out / "stability_report.csv",
                      {"family", "L", "F", "epsilon", "trial", "seed", "empirical", "bound", "M",
                       "f_norm", "flag"});
    for (PerturbationFamily fam : families) {
      StabilityConfig c = config;
      c.family = fam;
      const StabilityReport report = run_stability_grid(c, archs, built.op, spec, input);
      for (const auto& r : report.rows) {
        csv.cell(to_string(fam)).cell(r.layers).cell(r.width).cell(r.epsilon).cell(r.trial);
        csv.cell(std::to_string(r.seed)).cell(r.empirical).cell(r.bound).cell(r.groups).cell(r.f_norm);
        csv.cell(r.flag ? 1 : 0);
        csv.end_row();
      }
      Json f;
      f["family"] = to_string(fam);
      f["delta"] = report.delta;
      f["lipschitz_b"] = report.lipschitz_b;
      f["lipschitz_b_hat"] = report.lipschitz_b_hat;
      f["M"] = report.groups;
      f["rows"] = report.rows.size();
      f["violations"] = report.violations();
      f["max_bound_ratio"] = report.max_bound_ratio();
      per_family.push_back(std::move(f));
      violations += report.violations();
      rows += report.rows.size();
      worst_ratio = std::max(worst_ratio, report.max_bound_ratio());
    }
  }
  summary["families"] = std::move(per_family);
  summary["rows"] = rows;
  summary["violations"] = violations;
  summary["max_bound_ratio"] = worst_ratio;
  serial::write_json_file(opts.out / "summary.json", summary);
  return {"stability_report.csv", "summary.json"};
}

// ---------------------------------------------------------------- wireless

std::vector<int> int_list(const Node& n, const std::string& key, int fallback) {
  if (!n.has(key)) return {fallback};
  const Node v = n.at(key);
  if (v.json().is_array()) {
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(static_cast<int>(v.at(i).integer()));
    if (out.empty()) v.fail("must not be empty");
    return out;
  }
  return {static_cast<int>(v.integer())};
}

WirelessNetwork network_from_config(const Node& root, std::uint64_t seed) {
  const std::optional<Node> n = root.has("network") ? std::optional<Node>(root.at("network")) : std::nullopt;
  static const Json empty = Json::object();
  const Node net_node = n ? *n : Node(empty, "$.network");
  net_node.allow_only({"n", "region_half_width", "pathloss_exp", "p0", "P_max", "interference", "seed"});
  const int count = static_cast<int>(net_node.integer("n", 50));
  const std::uint64_t net_seed =
      net_node.has("seed") ? net_node.at("seed").seed() : fork_seed(seed, 41);
  WirelessNetwork net;
  try {
    net = generate_network(count, net_node.number("region_half_width", 50.0),
                           net_node.number("pathloss_exp", 2.2), net_seed,
                           net_node.number("p0", 1.0), net_node.optional_number("P_max"));
    net.interference = parse_interference(net_node.string("interference", "log_state"));
  } catch (const ValidationError& e) {
    net_node.fail(e.what());
  }
  return net;
}

struct ModelBundle {
  WirelessNetwork net;
  std::vector<TrainedPolicy> models;
};

ModelBundle read_bundle(const RunOptions& opts) {
  if (!opts.model) throw UsageError("wireless " + opts.subcommand + " needs --model <model.json>");
  if (!fs::exists(*opts.model)) throw UsageError("model file '" + opts.model->string() + "' not found");
  const Json j = serial::read_json_file(*opts.model);
  const Node root(j, "$");
  ModelBundle b;
  b.net = serial::network_from_json(root.at("network"));
  const Node models = root.at("models");
  for (std::size_t i = 0; i < models.size(); ++i) {
    const Node m = models.at(i);
    m.allow_only({"seed", "policy"});
    b.models.push_back({serial::policy_from_json(m.at("policy")), m.at("seed").seed()});
  }
  if (b.models.empty()) models.fail("bundle has no models");
  return b;
}

Outputs cmd_wireless_train(const RunOptions& opts, const Node& root, std::uint64_t seed) {
  const WirelessNetwork net = network_from_config(root, seed);
  static const Json empty = Json::object();
  const Node policy = root.has("policy") ? root.at("policy") : Node(empty, "$.policy");
  policy.allow_only({"layers", "widths", "width", "taps", "gamma", "activation"});
  const Node train = root.has("train") ? root.at("train") : Node(empty, "$.train");
  train.allow_only({"iters", "lr", "lr_dual", "batch", "seeds", "curve_stride"});

  PolicyArch base;
  base.taps = static_cast<int>(policy.integer("taps", base.taps));
  base.gamma = policy.number("gamma", base.gamma);
  try {
    base.activation = parse_activation(policy.string("activation", "tanh"));
  } catch (const ValidationError& e) {
    policy.at("activation").fail(e.what());
  }
  const std::vector<int> layers = int_list(policy, "layers", base.layers);
  const std::vector<int> widths =
      policy.has("widths") ? int_list(policy, "widths", base.width) : int_list(policy, "width", base.width);

  TrainConfig tc;
  tc.iters = static_cast<int>(train.integer("iters", tc.iters));
  tc.lr = train.number("lr", tc.lr);
  tc.lr_dual = train.optional_number("lr_dual");
  tc.batch = static_cast<int>(train.integer("batch", tc.batch));
  const std::vector<int> seeds = int_list(train, "seeds", 0);
  const int stride = static_cast<int>(train.integer("curve_stride", 1));
  if (stride < 1) train.at("curve_stride").fail("must be >= 1");

  struct Job {
    PolicyArch arch;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int l : layers) {
    for (int w : widths) {
      for (int s : seeds) {
        if (s < 0) train.at("seeds").fail("seeds must be >= 0");
        PolicyArch a = base;
        a.layers = l;
        a.width = w;
        try {
          validate(a);
        } catch (const ValidationError& e) {
          policy.fail(e.what());
        }
        jobs.push_back({a, static_cast<std::uint64_t>(s)});
      }
    }
  }

  std::vector<TrainResult> results(jobs.size());
  parallel_for(static_cast<std::ptrdiff_t>(jobs.size()), [&](std::ptrdiff_t i) {
    const Job& job = jobs[static_cast<std::size_t>(i)];
    TrainConfig c = tc;
    c.seed = fork_seed(fork_seed(fork_seed(seed, job.seed), static_cast<std::uint64_t>(job.arch.layers)),
                       static_cast<std::uint64_t>(job.arch.width));
    results[static_cast<std::size_t>(i)] = train_policy(net, job.arch, c);
  });

  {
    io::CsvWriter csv(opts.out / "training_curve.csv",
                      {"L", "F", "seed", "iter", "lagrangian", "sum_rate", "power", "mu",
                       "nominal_sum_rate", "nominal_power"});
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      for (const auto& p : results[i].curve) {
        if (p.iter % stride != 0 && p.iter + 1 != tc.iters) continue;
        csv.cell(jobs[i].arch.layers).cell(jobs[i].arch.width).cell(std::to_string(jobs[i].seed));
        csv.cell(p.iter).cell(p.lagrangian).cell(p.sum_rate).cell(p.power).cell(p.mu);
        csv.cell(p.nominal_sum_rate).cell(p.nominal_power);
        csv.end_row();
      }
    }
  }
  Json bundle;
  bundle["network"] = serial::to_json(net);
  Json models = Json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    models.push_back({{"seed", jobs[i].seed}, {"policy", serial::to_json(results[i].model)}});
  }
  bundle["models"] = std::move(models);
  serial::write_json_file(opts.out / "model.json", bundle);
  return {"training_curve.csv", "model.json"};
}

Outputs cmd_wireless_evaluate(const RunOptions& opts, const Node& root, std::uint64_t seed) {
  const ModelBundle b = read_bundle(opts);
  static const Json empty = Json::object();
  const Node ev = root.has("evaluate") ? root.at("evaluate") : Node(empty, "$.evaluate");
  ev.allow_only({"draws"});
  const int draws = static_cast<int>(ev.integer("draws", 200));
  if (draws < 1) ev.at("draws").fail("must be >= 1");

  std::vector<Evaluation> evals(b.models.size());
  for (std::size_t i = 0; i < b.models.size(); ++i) {
    evals[i] = evaluate_policy(b.net, b.models[i].model, draws, evaluation_seed(seed, b.models[i].seed));
  }
  io::CsvWriter csv(opts.out / "evaluation.csv",
                    {"L", "F", "seed", "policy_rate", "policy_rate_hard", "baseline_rate", "ratio",
                     "ratio_hard", "policy_power", "policy_power_hard", "baseline_power", "P_max"});
  for (std::size_t i = 0; i < b.models.size(); ++i) {
    const auto& m = b.models[i];
    const Evaluation& e = evals[i];
    csv.cell(m.model.arch.layers).cell(m.model.arch.width).cell(std::to_string(m.seed));
    csv.cell(e.policy_rate).cell(e.policy_rate_hard).cell(e.baseline_rate).cell(e.ratio(false));
    csv.cell(e.ratio(true)).cell(e.policy_power).cell(e.policy_power_hard).cell(e.baseline_power);
    csv.cell(b.net.P_max);
    csv.end_row();
  }
  return {"evaluation.csv"};
}

Outputs cmd_wireless_robustness(const RunOptions& opts, const Node& root, std::uint64_t seed) {
  const ModelBundle b = read_bundle(opts);
  static const Json empty = Json::object();
  const Node rb = root.has("robustness") ? root.at("robustness") : Node(empty, "$.robustness");
  rb.allow_only({"sigmas", "draws", "hard"});
  const std::vector<double> sigmas = rb.has("sigmas") ? rb.at("sigmas").numbers() : std::vector<double>{0.1};
  for (double s : sigmas) {
    if (s < 0.0) rb.at("sigmas").fail("sigma must be >= 0");
  }
  if (sigmas.empty()) rb.at("sigmas").fail("must not be empty");
  const int draws = static_cast<int>(rb.integer("draws", 200));
  if (draws < 1) rb.at("draws").fail("must be >= 1");
  const bool hard = rb.boolean("hard", false);

  const std::vector<RobustnessRow> rows = robustness_study(b.net, b.models, sigmas, draws, seed, hard);
  {
    io::CsvWriter csv(opts.out / "robustness.csv",
                      {"L", "F", "sigma", "seed", "ratio_nominal", "ratio_perturbed", "difference"});
    for (const auto& r : rows) {
      csv.cell(r.layers).cell(r.width).cell(r.sigma).cell(std::to_string(r.seed));
      csv.cell(r.ratio_nominal).cell(r.ratio_perturbed).cell(r.difference);
      csv.end_row();
    }
  }
  const std::vector<TrendRow> trend = robustness_trend(rows);
  {
    io::CsvWriter csv(opts.out / "robustness_trend.csv",
                      {"sigma", "L", "F", "median_difference", "seeds"});
    for (const auto& t : trend) {
      csv.cell(t.sigma).cell(t.layers).cell(t.width).cell(t.median_difference).cell(t.samples);
      csv.end_row();
    }
  }
  return {"robustness.csv", "robustness_trend.csv"};
}

Outputs dispatch(const RunOptions& opts, const Node& root, std::uint64_t seed) {
  if (opts.command == "spectrum") return cmd_spectrum(opts, root, seed);
  if (opts.command == "stability") return cmd_stability(opts, root, seed);
  if (opts.command == "wireless") {
    root.allow_only({"network", "policy", "train", "evaluate", "robustness", "seed"});
    if (opts.subcommand == "train") return cmd_wireless_train(opts, root, seed);
    if (opts.subcommand == "evaluate") return cmd_wireless_evaluate(opts, root, seed);
    if (opts.subcommand == "robustness") return cmd_wireless_robustness(opts, root, seed);
    throw UsageError("wireless subcommand must be train, evaluate or robustness (got '" +
                     opts.subcommand + "')");
  }
  throw UsageError("unknown command '" + opts.command + "' (expected spectrum, stability, wireless)");
}

}  // namespace

int resolve_threads(const std::optional<int>& flag) {
  if (flag) {
    if (*flag < 1) throw UsageError("--threads must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv(kThreadsEnv); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw UsageError(std::string(kThreadsEnv) + " must be a positive integer");
    return static_cast<int>(v);
  }
  return kernels::max_threads();
}

std::vector<std::string> run(const RunOptions& opts) {
  const std::string started = utc_now();
  const int threads = resolve_threads(opts.threads);
  kernels::set_num_threads(threads);
  if (opts.command != "wireless" && !opts.subcommand.empty()) {
    throw UsageError(opts.command + " takes no subcommand");
  }
  const Json config = serial::read_json_file(opts.config);
  const Node root(config, "$");
  if (!config.is_object()) root.fail("expected a JSON object");
  const std::uint64_t seed = run_seed(opts, root);
  std::error_code ec;
  fs::create_directories(opts.out, ec);
  if (ec) throw UsageError("cannot create output directory '" + opts.out.string() + "': " + ec.message());

  auto write_manifest = [&](const Outputs& files, const std::string& status) {
    Json m;
    m["command"] = opts.command;
    m["subcommand"] = opts.subcommand;
    m["config"] = opts.config.string();
    m["model"] = opts.model ? Json(opts.model->string()) : Json(nullptr);
    m["seed"] = seed;
    m["threads"] = threads;
    m["out"] = opts.out.string();
    m["tool_version"] = kToolVersion;
    m["started_at"] = started;
    m["finished_at"] = utc_now();
    m["status"] = status;
    m["outputs"] = files;
    serial::write_json_file(opts.out / "manifest.json", m);
  };

  Outputs files = dispatch(opts, root, seed);
  files.push_back("manifest.json");
  if (opts.command == "stability") {
    const Json summary = serial::read_json_file(opts.out / "summary.json");
    const auto violations = summary.at("violations").get<std::size_t>();
    if (violations > 0) {
      write_manifest(files, "bound_violation");
      throw InvariantViolation(std::to_string(violations) +
                               " rows exceed the stability bound; see stability_report.csv");
    }
  }
  write_manifest(files, "ok");
  return files;
}

int run_and_report(const RunOptions& opts) {
  try {
    run(opts);
    return static_cast<int>(ExitCode::kSuccess);
  } catch (const Error& e) {
    std::cerr << "spectool: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "spectool: internal error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kNumeric);
  }
}

}  // namespace spectool::cli
