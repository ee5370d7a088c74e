#include "grate/sobolev.hpp"

#include <cmath>
#include <random>

#include "grate/error.hpp"

namespace grate {

SobolevSpec::SobolevSpec(double beta_, double Q_, double r_) : beta(beta_), Q(Q_), r(r_) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorKind::InvalidArgument, "beta must be positive");
  }
  if (!(Q > 0.0) || !std::isfinite(Q)) throw Error(ErrorKind::InvalidArgument, "Q must be positive");
  if (!(r >= 1.0) || !std::isfinite(r)) throw Error(ErrorKind::InvalidArgument, "r must be >= 1");
}

EllipsoidWeights ellipsoid_weights(const Eigen::Ref<const Eigen::VectorXd>& lambdas,
                                   const SobolevSpec& spec) {
  const auto n = static_cast<double>(lambdas.size());
  const double scale = std::pow(n, 2.0 * spec.beta / spec.r);
  EllipsoidWeights w{Eigen::VectorXd(lambdas.size()), spec.radius_squared()};
  for (Eigen::Index j = 0; j < lambdas.size(); ++j) {
    // Round-off can leave tiny negative eigenvalues; the Laplacian is PSD.
    const double lam = std::max(0.0, lambdas(j));
    w.a(j) = std::sqrt(1.0 + scale * std::pow(lam, spec.beta));
  }
  // Degenerate eigenvalues may come back from the solver a few ulps out of order.
  for (Eigen::Index j = 1; j < w.a.size(); ++j) w.a(j) = std::max(w.a(j), w.a(j - 1));
  return w;
}

EllipsoidWeights ellipsoid_weights(const Spectrum& s, const SobolevSpec& spec) {
  return ellipsoid_weights(s.lambdas, spec);
}

double sobolev_form(const Spectrum& s, const SobolevSpec& spec,
                    const Eigen::Ref<const Eigen::VectorXd>& f) {
  const Eigen::VectorXd c = gft_forward(s, f);
  const EllipsoidWeights w = ellipsoid_weights(s, spec);
  return (w.a.array().square() * c.array().square()).sum();
}

bool in_ball(const Spectrum& s, const SobolevSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& f) {
  return sobolev_form(s, spec, f) <= spec.radius_squared() * (1.0 + kMembershipTolerance);
}

Eigen::VectorXd sample_ball_coefficients(const EllipsoidWeights& w, double fill, std::uint64_t seed) {
  if (!(fill > 0.0 && fill <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "sample_ball: fill must lie in (0,1]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd g(w.a.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) g(j) = normal(rng);
  const double scale = std::sqrt(fill * w.R) / g.norm();
  return (scale * g.array() / w.a.array()).matrix();
}

Eigen::VectorXd sample_ball(const Spectrum& s, const SobolevSpec& spec, double fill,
                            std::uint64_t seed) {
  return gft_inverse(s, sample_ball_coefficients(ellipsoid_weights(s, spec), fill, seed));
}

}  // namespace grate
