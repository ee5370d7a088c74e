#include "grate/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grate/csv.hpp"
#include "grate/error.hpp"

namespace grate {
namespace {

constexpr double kEquationTolerance = 1e-8;
constexpr double kBisectionTolerance = 1e-10;

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double sigmoid_complement(double t) { return sigmoid(-t); }

double sigmoid_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "inverse link undefined at p=" + format_number(p) + " (needs 0 < p < 1)");
  }
  return std::log(p) - std::log1p(-p);
}

// e^{-|t|} / (1 + e^{-|t|})^2, evaluated without forming Psi (1 - Psi).
double sigmoid_derivative(double t) {
  const double e = std::exp(-std::abs(t));
  return e / ((1.0 + e) * (1.0 + e));
}

void check_sizes(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) throw Error(ErrorKind::InvalidArgument, std::string(what) + ": length mismatch");
}

}  // namespace

std::size_t cutoff_N(const EllipsoidWeights& w, double epsilon) {
  const std::size_t n = w.size();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "cutoff_N: empty weights");
  const double eps2 = epsilon * epsilon;
  // Prefix sums of a_j and a_j^2 make each candidate O(1). The criterion is
  // non-decreasing in m because a is, so the scan stops at the first failure.
  double sum_a = 0.0, sum_a2 = 0.0;
  std::size_t N = 0;
  for (std::size_t m = 1; m <= n; ++m) {
    const double last = w.a(static_cast<Eigen::Index>(m - 1));
    sum_a += last;
    sum_a2 += last * last;
    if (eps2 * (last * sum_a - sum_a2) < w.R) {
      N = m;
    } else {
      break;
    }
  }
  return N;
}

double pinsker_equation_lhs(const EllipsoidWeights& w, double epsilon, double x) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < w.a.size(); ++j) {
    acc += w.a(j) * std::max(0.0, 1.0 - x * w.a(j));
  }
  return epsilon * epsilon * acc / x;
}

double solve_x(const EllipsoidWeights& w, double epsilon, std::size_t N) {
  if (N == 0 || N > w.size()) {
    throw Error(ErrorKind::InvalidArgument, "solve_x: N out of range");
  }
  const double eps2 = epsilon * epsilon;
  const auto head = w.a.head(static_cast<Eigen::Index>(N));
  const double x = eps2 * head.sum() / (w.R + eps2 * head.squaredNorm());

  const double lhs = pinsker_equation_lhs(w, epsilon, x);
  if (!(std::abs(lhs - w.R) <= kEquationTolerance * w.R)) {
    throw Error(ErrorKind::Internal, "solve_x: closed-form root gives " + format_number(lhs) +
                                         " instead of R=" + format_number(w.R) + " (N=" +
                                         std::to_string(N) + ")");
  }

  // The left side decreases from +inf at 0 to 0 at 1/a_0.
  double lo = 0.0, hi = 1.0 / w.a(0);
  for (int it = 0; it < 400 && hi - lo > 1e-17 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pinsker_equation_lhs(w, epsilon, mid) > w.R) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double bisected = 0.5 * (lo + hi);
  if (!(std::abs(bisected - x) <= kBisectionTolerance * x)) {
    throw Error(ErrorKind::Internal, "solve_x: closed form " + format_number(x) +
                                         " disagrees with bisection " + format_number(bisected));
  }
  return x;
}

ShrinkagePlan pinsker_plan(const EllipsoidWeights& w, double sigma, std::size_t n) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::InvalidArgument, "sigma must be non-negative");
  }
  if (n != w.size()) throw Error(ErrorKind::InvalidArgument, "pinsker_plan: n does not match weights");
  const double epsilon = sigma / std::sqrt(static_cast<double>(n));
  if (sigma == 0.0) {
    return ShrinkagePlan{n, 0.0, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)), 0.0, 0.0};
  }
  const std::size_t N = cutoff_N(w, epsilon);
  const double x = solve_x(w, epsilon, N);
  ShrinkagePlan plan{N, x, (1.0 - x * w.a.array()).max(0.0).matrix(), 0.0, epsilon};
  plan.S = epsilon * epsilon * plan.l.sum();
  return plan;
}

Eigen::VectorXd worst_case_variances(const ShrinkagePlan& plan, const EllipsoidWeights& w) {
  Eigen::VectorXd v2 = Eigen::VectorXd::Zero(w.a.size());
  if (plan.x <= 0.0) return v2;
  const double eps2 = plan.epsilon * plan.epsilon;
  for (Eigen::Index j = 0; j < w.a.size(); ++j) {
    const double xa = plan.x * w.a(j);
    v2(j) = eps2 * std::max(0.0, 1.0 - xa) / xa;
  }
  return v2;
}

Eigen::VectorXd shrink(const Spectrum& s, const Eigen::Ref<const Eigen::VectorXd>& weights,
                       const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_sizes(weights.size(), y.size(), "shrink");
  const Eigen::VectorXd z = gft_forward(s, y);
  return gft_inverse(s, weights.cwiseProduct(z));
}

Eigen::VectorXd estimate_regression(const Spectrum& s, const ShrinkagePlan& plan,
                                    const Eigen::Ref<const Eigen::VectorXd>& y) {
  return shrink(s, plan.l, y);
}

double linear_risk(const Eigen::Ref<const Eigen::VectorXd>& l,
                   const Eigen::Ref<const Eigen::VectorXd>& f_coeffs, double epsilon) {
  check_sizes(l.size(), f_coeffs.size(), "linear_risk");
  const auto bias = ((1.0 - l.array()).square() * f_coeffs.array().square()).sum();
  return bias + epsilon * epsilon * l.squaredNorm();
}

double sup_risk_over_ellipsoid(const Eigen::Ref<const Eigen::VectorXd>& l,
                               const EllipsoidWeights& w, double epsilon) {
  check_sizes(l.size(), w.a.size(), "sup_risk_over_ellipsoid");
  const double worst_bias = ((1.0 - l.array()).square() / w.a.array().square()).maxCoeff();
  return w.R * worst_bias + epsilon * epsilon * l.squaredNorm();
}

Eigen::VectorXd projection_estimate(const Spectrum& s, const Eigen::Ref<const Eigen::VectorXd>& y,
                                    std::size_t m) {
  if (m < 1 || m > s.size()) {
    throw Error(ErrorKind::InvalidArgument, "projection cutoff m=" + std::to_string(m) +
                                                " outside [1, " + std::to_string(s.size()) + "]");
  }
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.size()));
  weights.head(static_cast<Eigen::Index>(m)).setOnes();
  return shrink(s, weights, y);
}

std::size_t projection_cutoff(std::size_t n, const SobolevSpec& spec) {
  const double m = std::round(std::pow(static_cast<double>(n), spec.r / (2.0 * spec.beta + spec.r)));
  return std::clamp<std::size_t>(static_cast<std::size_t>(m), 1, n);
}

const LinkFunction& sigmoid_link() {
  static const LinkFunction link{&sigmoid, &sigmoid_complement, &sigmoid_inverse, &sigmoid_derivative, 0.25, 1.0};
  return link;
}

Eigen::VectorXd estimate_classification(const Spectrum& s, const ShrinkagePlan& plan,
                                        const Eigen::Ref<const Eigen::VectorXd>& y,
                                        ClassificationMode mode, const LinkFunction& link) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) {
      throw Error(ErrorKind::InvalidArgument,
                  "classification labels must be 0 or 1 (vertex " + std::to_string(i) + ")");
    }
  }
  const auto clip = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v.array().max(kProbabilityClip).min(1.0 - kProbabilityClip).matrix();
  };
  Eigen::VectorXd rho = clip(shrink(s, plan.l, y));
  if (mode == ClassificationMode::Link) {
    const Eigen::VectorXd logits = rho.unaryExpr(link.inverse);
    rho = clip(shrink(s, plan.l, logits).unaryExpr(link.value));
  }
  return rho;
}

}  // namespace grate
