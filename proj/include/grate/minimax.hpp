#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "grate/estimator.hpp"
#include "grate/sobolev.hpp"
#include "grate/spectral.hpp"

namespace grate {

// Sign vectors in {-1,+1}^N with pairwise Hamming distance (number of
// disagreeing coordinates) at least ceil(N/8).
struct PackingSet {
  std::size_t N;
  std::vector<std::vector<std::int8_t>> thetas;
  std::size_t min_hamming;

  std::size_t M() const noexcept { return thetas.size(); }
};

/// Upper limit on the packing size; keeps pairwise work bounded for large N.
inline constexpr std::size_t kMaxPackingSize = 4096;

std::size_t hamming_distance(const std::vector<std::int8_t>& a, const std::vector<std::int8_t>& b);

/// Randomized greedy Varshamov-Gilbert packing. Targets
/// min(kMaxPackingSize, max(2, floor(2^{N/8}))) vectors within 1000 * target
/// draws. Throws InvalidArgument for N < 8, Numeric if fewer than two vectors
/// were accepted.
PackingSet vg_packing(std::size_t N, std::uint64_t seed);

/// ceil(n^{r/(2 beta + r)}), with values within 1e-9 of an integer snapped to it.
std::size_t fano_dimension(std::size_t n, const SobolevSpec& spec);

/// delta N^{-(2 beta + r)/(2r)}: the common magnitude of the alternatives' coefficients.
double alternative_amplitude(const SobolevSpec& spec, std::size_t N, double delta);

/// Zero function first, then f_theta = amplitude * sum_{j<N} theta_j psi_j for
/// each packing vector.
std::vector<Eigen::VectorXd> hard_alternatives(const Spectrum& s, const SobolevSpec& spec,
                                               double delta, const PackingSet& pack);

/// Largest delta keeping every f_theta inside H^beta(Q):
/// Q N^{(2 beta + r)/(2r)} / sqrt(sum_{j<N} (1 + n^{2 beta/r} lambda_j^beta)).
double delta_sobolev_limit(const Spectrum& s, const SobolevSpec& spec, std::size_t N);

/// K(Bernoulli(rho1) || Bernoulli(rho2)) summed over vertices.
/// Throws InvalidArgument if an entry lies outside (0,1).
double bernoulli_kl(const Eigen::Ref<const Eigen::VectorXd>& rho1,
                    const Eigen::Ref<const Eigen::VectorXd>& rho2);

struct KlBoundCheck {
  double kl;
  double bound;  // n c ||v1 - v2||_n^2 with c = sup|Psi'/(Psi(1-Psi))| sup|Psi'|
  bool holds;
};

KlBoundCheck kl_link_bound_check(const Eigen::Ref<const Eigen::VectorXd>& v1,
                                 const Eigen::Ref<const Eigen::VectorXd>& v2,
                                 const LinkFunction& link = sigmoid_link());

enum class FanoMode { Regression, Classification };

struct FanoModel {
  FanoMode mode = FanoMode::Classification;
  double sigma = 1.0;  // regression noise level
  const LinkFunction* link = &sigmoid_link();
};

/// K(P_theta, P_0) for one alternative against the zero function.
double alternative_kl(const FanoModel& model, const Eigen::Ref<const Eigen::VectorXd>& f);

/// Largest delta (up to a 1e-9 relative margin) with every alternative in
/// H^beta(Q) and worst-alternative KL budget alpha <= 1/2.
double calibrate_delta(const Spectrum& s, const SobolevSpec& spec, const PackingSet& pack,
                       const FanoModel& model);

inline constexpr double kTargetAlpha = 0.5;

struct FanoCertificate {
  std::size_t n;
  double beta;
  double r;
  double Q;
  std::uint64_t seed;
  FanoMode mode;
  std::size_t N;
  std::size_t M;
  std::size_t min_hamming;
  double delta;
  double separation_min;  // min over pairs (zero function included) of ||f_i - f_j||_n
  double sobolev_max;
  double kl_budget;       // (1/(M+1)) sum_j K(P_j, P_0)
  double alpha;           // kl_budget / log M
  double fano_bound;      // (log(M+1) - log 2) / log M - alpha
  double max_norm_identity_error;  // relative, over all packing pairs
  bool valid;
};

/// Packing, calibration, alternatives and the Fano quantities for one seed.
/// Throws Validation "n too small for packing" when N < 8.
FanoCertificate fano_certificate(const Spectrum& s, const SobolevSpec& spec,
                                 const FanoModel& model, std::uint64_t seed);

/// Rebuilds the certificate from its recorded seed and compares every field.
bool revalidate(const FanoCertificate& cert, const Spectrum& s, const FanoModel& model);

void write_certificate_csv(std::ostream& out, const FanoCertificate& cert);

/// Centered Gaussian coefficients with variances (1 - delta_prior) v_j^2,
/// zero outside the plan's support.
Eigen::VectorXd worst_case_prior_sample(const ShrinkagePlan& plan, const EllipsoidWeights& w,
                                        double delta_prior, std::uint64_t seed);

struct PriorBayesRisk {
  double empirical;  // mean over draws of sum_j (l_j Z_j - f_j)^2
  double standard_error;
  double S;
  double lower;      // 0.8 (1 - delta_prior) S
  double upper;      // 1.05 S
  double mean_ellipsoid_form;  // mean of sum_j a_j^2 f_j^2
  bool within_band;
};

/// Monte Carlo Bayes risk of the Pinsker plan under the worst-case prior,
/// simulated in coefficient space.
PriorBayesRisk prior_bayes_risk(const ShrinkagePlan& plan, const EllipsoidWeights& w,
                                double delta_prior, std::size_t draws, std::uint64_t seed);

}  // namespace grate
