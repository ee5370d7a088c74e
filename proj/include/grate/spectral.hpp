#pragma once

#include <cstddef>
#include <ostream>
#include <span>

#include <Eigen/Dense>

#include "grate/graph.hpp"

namespace grate {

// Laplacian eigenpairs in ascending eigenvalue order. Column j of `basis` is
// psi_j, scaled so that (1/n) sum_k psi_j(k)^2 = 1. The first entry of each
// psi_j with magnitude above 1e-12 is positive.
struct Spectrum {
  Eigen::VectorXd lambdas;
  Eigen::MatrixXd basis;

  std::size_t size() const noexcept { return static_cast<std::size_t>(lambdas.size()); }
};

struct GeometryFit {
  double r_hat;
  double slope;  // of log(lambda_i) against log(i/n); r_hat = 2 / slope
  std::size_t i0;
  double kappa;
  double c1_hat;
  double c2_hat;
  double rss;
};

inline constexpr std::size_t kDefaultFitStart = 5;
inline constexpr double kDefaultFitFraction = 0.5;

/// Full dense eigendecomposition (LAPACK dsyevd) with the <.,.>_n scaling
/// and sign convention applied. Throws Numeric when the solver fails or a
/// residual exceeds 1e-8.
Spectrum eigendecompose(const Graph& g, std::size_t dense_cap = kDefaultDenseCap);

/// lambda_j = 4 sin^2(pi j / 2n).
Eigen::VectorXd path_eigenvalues(std::size_t n);

/// Analytic path-graph eigenpairs, psi_j(i) = sqrt(2) cos(pi j (2i+1) / 2n)
/// for 0-based i and j >= 1, psi_0 = 1.
Spectrum path_spectrum_closed_form(std::size_t n);

GeometryFit fit_geometry(std::span<const double> lambdas, std::size_t i0 = kDefaultFitStart,
                         double kappa = kDefaultFitFraction);
GeometryFit fit_geometry(const Spectrum& s, std::size_t i0 = kDefaultFitStart,
                         double kappa = kDefaultFitFraction);

/// max over i, j of |psi_j(i)|.
double sup_norm_bound(const Spectrum& s);

/// coefficient_j = <f, psi_j>_n.
Eigen::VectorXd gft_forward(const Spectrum& s, const Eigen::Ref<const Eigen::VectorXd>& f);

/// sum_j coeffs_j psi_j.
Eigen::VectorXd gft_inverse(const Spectrum& s, const Eigen::Ref<const Eigen::VectorXd>& coeffs);

double inner_n(const Eigen::Ref<const Eigen::VectorXd>& f, const Eigen::Ref<const Eigen::VectorXd>& g);
double norm_n_squared(const Eigen::Ref<const Eigen::VectorXd>& f);

struct SpectrumDiagnostics {
  double max_orthonormality_error;  // max |<psi_i, psi_j>_n - delta_ij|
  double max_residual;              // max_j ||L psi_j - lambda_j psi_j||_2 / max(1, lambda_j)
};

/// O(n^3); intended for tests and spot checks.
SpectrumDiagnostics diagnose(const Spectrum& s, const Graph& g);

/// "j,lambda" rows, 12 significant digits.
void write_eigenvalues_csv(std::ostream& out, const Spectrum& s);

}  // namespace grate
