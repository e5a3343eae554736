#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>

#include <Eigen/Dense>

#include "spectool/spectrum.hpp"

namespace spectool {

/// Samples of a d-dimensional manifold embedded in R^N; one point per row.
class PointCloud {
 public:
  PointCloud(Eigen::MatrixXd points, int manifold_dim);

  const Eigen::MatrixXd& points() const { return points_; }
  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index ambient_dim() const { return points_.cols(); }
  int manifold_dim() const { return manifold_dim_; }

 private:
  Eigen::MatrixXd points_;
  int manifold_dim_;
};

/// Dense real symmetric matrix standing in for the Laplace-Beltrami operator.
class SymmetricOperator {
 public:
  explicit SymmetricOperator(Eigen::MatrixXd matrix, double symmetry_tol = 1e-12);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  double symmetry_tol() const { return symmetry_tol_; }
  Eigen::Index size() const { return matrix_.rows(); }

  /// Returns (A + A^T) / 2, which is exactly symmetric in floating point.
  static Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

 private:
  Eigen::MatrixXd matrix_;
  double symmetry_tol_;
};

struct Circle {
  double radius = 1.0;
};
struct Sphere {
  double radius = 1.0;
};
struct FlatTorus {
  double r1 = 1.0;
  double r2 = 1.0;
};
using AnalyticManifold = std::variant<Circle, Sphere, FlatTorus>;

int manifold_dimension(const AnalyticManifold& m);
void validate(const AnalyticManifold& m);

/// Neighborhood used when building a kernel Laplacian. knn = nullopt means
/// the dense (all-pairs) kernel.
struct KernelMode {
  std::optional<int> knn;
};

/// A kernel Laplacian together with the parameters it was built with.
struct KernelLaplacian {
  SymmetricOperator op;
  double bandwidth;
  /// Factor multiplying D - W.
  double scale;
};

/// (mean distance to the ceil(2 ln n)-th nearest neighbour)^2. Throws
/// DegeneracyError when that is zero (coincident points).
double heuristic_bandwidth(const PointCloud& cloud);

/// Gaussian-kernel graph Laplacian scale * (D - W) with
/// W(i,j) = exp(-|x_i - x_j|^2 / (4 t)). The scale is
/// (n t^{(d+2)/2} (4 pi)^{d/2})^{-1} divided by the mean kernel density
/// estimate, so that for uniform samples the spectrum approaches the
/// Laplace-Beltrami spectrum. Before assembly W is divided by the relative
/// sample density on both sides (W_ij / (q_i q_j), mean q = 1). In knn mode
/// each row keeps its k nearest neighbours and W is symmetrized by max.
/// bandwidth = nullopt selects heuristic_bandwidth.
KernelLaplacian kernel_laplacian_detailed(const PointCloud& cloud,
                                          std::optional<double> bandwidth,
                                          KernelMode mode = {});
SymmetricOperator kernel_laplacian(const PointCloud& cloud, std::optional<double> bandwidth,
                                   KernelMode mode = {});

/// Combinatorial graph Laplacian D - A of a symmetric nonnegative adjacency.
SymmetricOperator graph_laplacian(const Eigen::MatrixXd& adjacency);
/// Symmetric normalized Laplacian I - D^{-1/2} A D^{-1/2}; isolated nodes
/// get a zero row.
SymmetricOperator normalized_laplacian(const Eigen::MatrixXd& adjacency);

/// Smallest `count` eigenpairs (all when nullopt), eigenvalues nondecreasing.
Spectrum eigendecompose(const SymmetricOperator& op, std::optional<Eigen::Index> count = {},
                        bool indefinite = false);

/// First `count` Laplace-Beltrami eigenvalues of a reference manifold, with
/// multiplicity. No eigenvectors.
Spectrum analytic_spectrum(const AnalyticManifold& m, Eigen::Index count);

/// n uniform samples of a reference manifold: circle in R^2, sphere in R^3,
/// flat torus as the product of two circles in R^4.
PointCloud sample_manifold(const AnalyticManifold& m, Eigen::Index n, std::uint64_t seed);

PointCloud read_point_cloud_csv(const std::filesystem::path& path, int manifold_dim);
void write_point_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace spectool
