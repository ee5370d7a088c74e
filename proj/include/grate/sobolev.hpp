#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "grate/spectral.hpp"

namespace grate {

// Smoothness class {f : <f, (I + (n^{2/r} L)^beta) f>_n <= Q^2}.
struct SobolevSpec {
  double beta;
  double Q;
  double r;

  /// Throws InvalidArgument unless beta > 0, Q > 0 and r >= 1.
  SobolevSpec(double beta, double Q, double r);

  double radius_squared() const noexcept { return Q * Q; }
};

// Coefficient ellipsoid {c : sum_j a_j^2 c_j^2 <= R}. R is Q-squared.
struct EllipsoidWeights {
  Eigen::VectorXd a;  // a_0 = 1, non-decreasing
  double R;

  std::size_t size() const noexcept { return static_cast<std::size_t>(a.size()); }
};

/// a_j = sqrt(1 + n^{2 beta / r} lambda_j^beta), R = Q^2.
EllipsoidWeights ellipsoid_weights(const Spectrum& s, const SobolevSpec& spec);

/// Same weights computed from eigenvalues alone (no basis needed).
EllipsoidWeights ellipsoid_weights(const Eigen::Ref<const Eigen::VectorXd>& lambdas,
                                   const SobolevSpec& spec);

/// sum_j (1 + n^{2 beta / r} lambda_j^beta) <f, psi_j>_n^2.
double sobolev_form(const Spectrum& s, const SobolevSpec& spec,
                    const Eigen::Ref<const Eigen::VectorXd>& f);

/// Relative slack on the Q^2 comparison so boundary samples count as members.
inline constexpr double kMembershipTolerance = 1e-9;

bool in_ball(const Spectrum& s, const SobolevSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& f);

/// Coefficients with sum_j a_j^2 c_j^2 = fill * R exactly, direction drawn
/// from a seeded standard normal vector scaled by 1/a_j.
Eigen::VectorXd sample_ball_coefficients(const EllipsoidWeights& w, double fill, std::uint64_t seed);

/// gft_inverse of sample_ball_coefficients.
Eigen::VectorXd sample_ball(const Spectrum& s, const SobolevSpec& spec, double fill,
                            std::uint64_t seed);

}  // namespace grate
