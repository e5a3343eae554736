#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "spectool/filters.hpp"
#include "spectool/mnn.hpp"
#include "spectool/operators.hpp"
#include "spectool/perturb.hpp"
#include "spectool/spectrum.hpp"
#include "spectool/wireless.hpp"

namespace spectool::serial {

using Json = nlohmann::ordered_json;

Json matrix_to_json(const Eigen::MatrixXd& m);
Json vector_to_json(const Eigen::VectorXd& v);

Json to_json(const SymmetricOperator& op);
Json to_json(const SpectrumPartition& p);
Json to_json(const FilterSpec& f);
Json to_json(const MnnModel& m);
Json to_json(const PerturbationSpec& p);
Json to_json(const WirelessNetwork& net);
Json to_json(const PolicyModel& m);

/// Read-only view of a JSON value that remembers where it sits in the
/// document, so every error names the offending field ("$.train.lr").
/// Type and presence errors are UsageError.
class Node {
 public:
  Node(const Json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  const Json& json() const { return *value_; }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) const;
  Node at(const std::string& key) const;
  Node at(std::size_t index) const;
  std::size_t size() const;

  /// Rejects object keys outside `allowed`.
  void allow_only(std::initializer_list<const char*> allowed) const;

  double number() const;
  long long integer() const;
  std::uint64_t seed() const;
  bool boolean() const;
  std::string string() const;
  std::vector<double> numbers() const;
  Eigen::MatrixXd matrix() const;
  Eigen::VectorXd vector() const;

  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::optional<double> optional_number(const std::string& key) const;

  [[noreturn]] void fail(const std::string& message) const;

 private:
  const Json* value_;
  std::string path_;
};

SymmetricOperator operator_from_json(const Node& n);
SpectrumPartition partition_from_json(const Node& n);
FilterSpec filter_from_json(const Node& n);
MnnModel model_from_json(const Node& n);
PerturbationSpec perturbation_from_json(const Node& n);
WirelessNetwork network_from_json(const Node& n);
PolicyModel policy_from_json(const Node& n);

/// Parses a file; missing files and syntax errors are UsageError.
Json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with two-space indent and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& value);

}  // namespace spectool::serial
