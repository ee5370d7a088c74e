#include "grate/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <lapacke.h>

#include "grate/csv.hpp"
#include "grate/error.hpp"

namespace grate {
namespace {

constexpr double kSignThreshold = 1e-12;
constexpr double kZeroEigenTolerance = 1e-9;
constexpr double kResidualTolerance = 1e-8;

void apply_sign_convention(Eigen::MatrixXd& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      const double v = basis(i, j);
      if (std::abs(v) > kSignThreshold) {
        if (v < 0) basis.col(j) *= -1.0;
        break;
      }
    }
  }
}

void check_length(const Spectrum& s, Eigen::Index len, const char* what) {
  if (static_cast<std::size_t>(len) != s.size()) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + ": length " +
                                                std::to_string(len) + " does not match n=" +
                                                std::to_string(s.size()));
  }
}

}  // namespace

Spectrum eigendecompose(const Graph& g, std::size_t dense_cap) {
  const std::size_t n = g.size();
  Eigen::MatrixXd work = laplacian(g, dense_cap);
  Eigen::VectorXd lambdas(static_cast<Eigen::Index>(n));
  const auto ld = static_cast<lapack_int>(n);
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', ld, work.data(), ld, lambdas.data());
  if (info != 0) {
    throw Error(ErrorKind::Numeric, "dsyevd failed with info=" + std::to_string(info));
  }
  if (std::abs(lambdas(0)) > kZeroEigenTolerance) {
    throw Error(ErrorKind::Numeric,
                "smallest Laplacian eigenvalue " + format_number(lambdas(0)) + " is not zero");
  }
  lambdas(0) = 0.0;
  if (n > 1 && !(lambdas(1) > kZeroEigenTolerance * 1e-3)) {
    throw Error(ErrorKind::Numeric, "second eigenvalue " + format_number(lambdas(1)) +
                                        " is not positive; graph looks disconnected");
  }

  work *= std::sqrt(static_cast<double>(n));
  apply_sign_convention(work);

  Spectrum s{std::move(lambdas), std::move(work)};
  double worst = 0.0;
  Eigen::Index worst_j = 0;
  for (Eigen::Index j = 0; j < s.basis.cols(); ++j) {
    const Eigen::VectorXd r = apply_laplacian(g, s.basis.col(j)) - s.lambdas(j) * s.basis.col(j);
    const double rel = r.norm() / (s.basis.col(j).norm() * std::max(1.0, s.lambdas(j)));
    if (rel > worst) {
      worst = rel;
      worst_j = j;
    }
  }
  if (worst > kResidualTolerance) {
    throw Error(ErrorKind::Numeric, "eigenpair " + std::to_string(worst_j) +
                                        " has relative residual " + format_number(worst));
  }
  return s;
}

Eigen::VectorXd path_eigenvalues(std::size_t n) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "path: n must be >= 2");
  Eigen::VectorXd lambdas(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(j) / (2.0 * n));
    lambdas(static_cast<Eigen::Index>(j)) = 4.0 * s * s;
  }
  return lambdas;
}

Spectrum path_spectrum_closed_form(std::size_t n) {
  Spectrum s{path_eigenvalues(n), Eigen::MatrixXd(n, n)};
  const double scale = std::numbers::sqrt2;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double arg =
          std::numbers::pi * static_cast<double>(j) * static_cast<double>(2 * i + 1) / (2.0 * n);
      s.basis(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          j == 0 ? 1.0 : scale * std::cos(arg);
    }
  }
  return s;
}

GeometryFit fit_geometry(std::span<const double> lambdas, std::size_t i0, double kappa) {
  const std::size_t n = lambdas.size();
  if (i0 < 1) throw Error(ErrorKind::InvalidArgument, "fit_geometry: i0 must be >= 1");
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "fit_geometry: kappa must lie in (0,1]");
  }
  const auto last = std::min(n - 1, static_cast<std::size_t>(std::floor(kappa * n)));
  if (n == 0 || i0 >= last) {
    throw Error(ErrorKind::InvalidArgument, "fit_geometry: index range [" + std::to_string(i0) +
                                                ", floor(kappa*n)] holds fewer than two points");
  }

  const std::size_t count = last - i0 + 1;
  std::vector<double> xs(count), ys(count);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = i0; i <= last; ++i) {
    if (!(lambdas[i] > 0.0)) {
      throw Error(ErrorKind::InvalidArgument,
                  "fit_geometry: eigenvalue " + std::to_string(i) + " is not positive");
    }
    xs[i - i0] = std::log(static_cast<double>(i) / static_cast<double>(n));
    ys[i - i0] = std::log(lambdas[i]);
    mx += xs[i - i0];
    my += ys[i - i0];
  }
  mx /= static_cast<double>(count);
  my /= static_cast<double>(count);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  const double slope = sxy / sxx;
  if (!(slope > 0.0)) {
    throw Error(ErrorKind::Numeric, "fit_geometry: non-positive slope " + format_number(slope));
  }
  const double intercept = my - slope * mx;

  GeometryFit fit{2.0 / slope, slope, i0, kappa, INFINITY, 0.0, 0.0};
  for (std::size_t k = 0; k < count; ++k) {
    const double resid = ys[k] - (intercept + slope * xs[k]);
    fit.rss += resid * resid;
    const double ratio = std::exp(ys[k] - slope * xs[k]);
    fit.c1_hat = std::min(fit.c1_hat, ratio);
    fit.c2_hat = std::max(fit.c2_hat, ratio);
  }
  return fit;
}

GeometryFit fit_geometry(const Spectrum& s, std::size_t i0, double kappa) {
  return fit_geometry(std::span<const double>(s.lambdas.data(), s.size()), i0, kappa);
}

double sup_norm_bound(const Spectrum& s) { return s.basis.cwiseAbs().maxCoeff(); }

Eigen::VectorXd gft_forward(const Spectrum& s, const Eigen::Ref<const Eigen::VectorXd>& f) {
  check_length(s, f.size(), "gft_forward");
  return s.basis.transpose() * f / static_cast<double>(s.size());
}

Eigen::VectorXd gft_inverse(const Spectrum& s, const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
  check_length(s, coeffs.size(), "gft_inverse");
  return s.basis * coeffs;
}

double inner_n(const Eigen::Ref<const Eigen::VectorXd>& f,
               const Eigen::Ref<const Eigen::VectorXd>& g) {
  if (f.size() != g.size() || f.size() == 0) {
    throw Error(ErrorKind::InvalidArgument, "inner_n: length mismatch");
  }
  return f.dot(g) / static_cast<double>(f.size());
}

double norm_n_squared(const Eigen::Ref<const Eigen::VectorXd>& f) { return inner_n(f, f); }

SpectrumDiagnostics diagnose(const Spectrum& s, const Graph& g) {
  const auto n = static_cast<double>(s.size());
  const Eigen::MatrixXd gram = s.basis.transpose() * s.basis / n;
  SpectrumDiagnostics d{
      (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 0.0};
  for (Eigen::Index j = 0; j < s.basis.cols(); ++j) {
    const Eigen::VectorXd r = apply_laplacian(g, s.basis.col(j)) - s.lambdas(j) * s.basis.col(j);
    d.max_residual = std::max(d.max_residual, r.norm() / std::max(1.0, s.lambdas(j)));
  }
  return d;
}

void write_eigenvalues_csv(std::ostream& out, const Spectrum& s) {
  out << "j,lambda\n";
  for (std::size_t j = 0; j < s.size(); ++j) {
    write_csv_row(out, {std::to_string(j), format_number(s.lambdas(static_cast<Eigen::Index>(j)))});
  }
}

}  // namespace grate
