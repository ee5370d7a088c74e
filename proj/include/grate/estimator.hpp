#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "grate/sobolev.hpp"
#include "grate/spectral.hpp"

namespace grate {

// Pinsker linear shrinkage over the ellipsoid {sum a_j^2 c_j^2 <= R}:
// weights l_j = (1 - x a_j)_+ with support {0, ..., N-1}, minimax risk
// S = epsilon^2 sum_j l_j.
struct ShrinkagePlan {
  std::size_t N;
  double x;
  Eigen::VectorXd l;
  double S;
  double epsilon;
};

/// Number of active coefficients: the largest m such that
/// epsilon^2 sum_{j<m} a_j (a_{m-1} - a_j) < R.
std::size_t cutoff_N(const EllipsoidWeights& w, double epsilon);

/// Left side of the Pinsker equation, (epsilon^2 / x) sum_j a_j (1 - x a_j)_+.
double pinsker_equation_lhs(const EllipsoidWeights& w, double epsilon, double x);

/// Closed-form root using the first N weights. Cross-checked against the
/// defining equation (1e-8 relative) and a bisection solve (1e-10 relative);
/// a mismatch throws Internal.
double solve_x(const EllipsoidWeights& w, double epsilon, std::size_t N);

/// epsilon = sigma / sqrt(n). sigma = 0 yields the identity plan (N = n, x = 0,
/// l = 1, S = 0), the limit of the sigma -> 0 plans.
ShrinkagePlan pinsker_plan(const EllipsoidWeights& w, double sigma, std::size_t n);

/// Worst-case prior variances v_j^2 = epsilon^2 (1 - x a_j)_+ / (x a_j).
Eigen::VectorXd worst_case_variances(const ShrinkagePlan& plan, const EllipsoidWeights& w);

/// Applies coefficient weights to y in the eigenbasis.
Eigen::VectorXd shrink(const Spectrum& s, const Eigen::Ref<const Eigen::VectorXd>& weights,
                       const Eigen::Ref<const Eigen::VectorXd>& y);

Eigen::VectorXd estimate_regression(const Spectrum& s, const ShrinkagePlan& plan,
                                    const Eigen::Ref<const Eigen::VectorXd>& y);

/// sum_j (1 - l_j)^2 f_j^2 + epsilon^2 l_j^2.
double linear_risk(const Eigen::Ref<const Eigen::VectorXd>& l,
                   const Eigen::Ref<const Eigen::VectorXd>& f_coeffs, double epsilon);

/// sup over the ellipsoid of linear_risk: R max_j (1 - l_j)^2 / a_j^2 + epsilon^2 sum_j l_j^2.
double sup_risk_over_ellipsoid(const Eigen::Ref<const Eigen::VectorXd>& l,
                               const EllipsoidWeights& w, double epsilon);

/// Keeps the first m coefficients of y.
Eigen::VectorXd projection_estimate(const Spectrum& s, const Eigen::Ref<const Eigen::VectorXd>& y,
                                    std::size_t m);

/// round(n^{r / (2 beta + r)}), clamped to [1, n].
std::size_t projection_cutoff(std::size_t n, const SobolevSpec& spec);

// Link function R -> (0,1) with the two constants used by the KL bound.
struct LinkFunction {
  double (*value)(double);
  double (*complement)(double);  // 1 - Psi(t) without cancellation
  double (*inverse)(double);     // throws InvalidArgument outside (0,1)
  double (*derivative)(double);
  double sup_derivative;         // sup |Psi'|
  double sup_derivative_ratio;   // sup |Psi' / (Psi (1 - Psi))|
};

/// Logistic link 1 / (1 + e^{-t}); sup |Psi'| = 1/4 and the ratio is 1.
const LinkFunction& sigmoid_link();

enum class ClassificationMode { Direct, Link };

/// Lower and upper clip for probability estimates.
inline constexpr double kProbabilityClip = 1e-3;

/// Direct: shrink the labels and clip to [eta, 1-eta]. Link: clip the
/// shrunk labels, map through the inverse link, shrink again, map back.
/// Throws InvalidArgument if y is not 0/1-valued.
Eigen::VectorXd estimate_classification(const Spectrum& s, const ShrinkagePlan& plan,
                                        const Eigen::Ref<const Eigen::VectorXd>& y,
                                        ClassificationMode mode = ClassificationMode::Direct,
                                        const LinkFunction& link = sigmoid_link());

}  // namespace grate
