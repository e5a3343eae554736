#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "spectool/operators.hpp"
#include "spectool/rng.hpp"

namespace testsupport {

// Weighted Erdos-Renyi graph Laplacian, kept connected by a path backbone.
inline spectool::SymmetricOperator random_graph_laplacian(int n, std::uint64_t seed,
                                                          double density = 0.3) {
  spectool::Rng rng = spectool::make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j == i + 1 || u(rng) < density) {
        const double w = 0.1 + u(rng);
        a(i, j) = w;
        a(j, i) = w;
      }
    }
  }
  return spectool::graph_laplacian(a);
}

inline std::vector<int> random_permutation(int n, std::uint64_t seed) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  spectool::Rng rng = spectool::make_rng(seed);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// P with (P x)_i = x_{perm[i]}.
inline Eigen::MatrixXd permutation_matrix(const std::vector<int>& perm) {
  const int n = static_cast<int>(perm.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1.0;
  return p;
}

inline Eigen::VectorXd random_vector(int n, std::uint64_t seed) {
  spectool::Rng rng = spectool::make_rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

// sum_k c_k A^k by repeated multiplication.
inline Eigen::MatrixXd matrix_polynomial(const Eigen::MatrixXd& a, const std::vector<double>& c) {
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (double ck : c) {
    out += ck * power;
    power = power * a;
  }
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("spectool_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testsupport
