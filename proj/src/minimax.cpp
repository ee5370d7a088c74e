#include "grate/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "grate/csv.hpp"
#include "grate/error.hpp"
#include "grate/seeds.hpp"

namespace grate {
namespace {

constexpr double kDeltaMargin = 1e-9;

double log_m(std::size_t M) { return std::log(static_cast<double>(M)); }

// Alternatives at delta = 1; f_theta scales linearly in delta.
std::vector<Eigen::VectorXd> unit_alternatives(const Spectrum& s, const SobolevSpec& spec,
                                               const PackingSet& pack) {
  return hard_alternatives(s, spec, 1.0, pack);
}

double worst_alpha(const std::vector<Eigen::VectorXd>& unit, double delta, const FanoModel& model) {
  double worst = 0.0;
  for (std::size_t j = 1; j < unit.size(); ++j) {
    worst = std::max(worst, alternative_kl(model, delta * unit[j]));
  }
  const std::size_t M = unit.size() - 1;
  return static_cast<double>(M) / static_cast<double>(M + 1) * worst / log_m(M);
}

double bernoulli_term(double p, double p_c, double q, double q_c) {
  double t = 0.0;
  if (p > 0.0) t += p * std::log(p / q);
  if (p_c > 0.0) t += p_c * std::log(p_c / q_c);
  return t;
}

}  // namespace

std::size_t hamming_distance(const std::vector<std::int8_t>& a, const std::vector<std::int8_t>& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

PackingSet vg_packing(std::size_t N, std::uint64_t seed) {
  if (N < 8) throw Error(ErrorKind::InvalidArgument, "vg_packing: N must be >= 8");
  const std::size_t threshold = (N + 7) / 8;
  const double raw_target = std::floor(std::exp2(static_cast<double>(N) / 8.0));
  const std::size_t target =
      raw_target >= static_cast<double>(kMaxPackingSize)
          ? kMaxPackingSize
          : std::max<std::size_t>(2, static_cast<std::size_t>(raw_target));

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  PackingSet pack{N, {}, N};
  std::vector<std::int8_t> candidate(N);
  for (std::size_t attempt = 0; attempt < 1000 * target && pack.M() < target; ++attempt) {
    for (auto& c : candidate) c = coin(rng) ? 1 : -1;
    std::size_t closest = N;
    for (const auto& accepted : pack.thetas) {
      closest = std::min(closest, hamming_distance(candidate, accepted));
      if (closest < threshold) break;
    }
    if (closest >= threshold) {
      pack.thetas.push_back(candidate);
      if (pack.M() > 1) pack.min_hamming = std::min(pack.min_hamming, closest);
    }
  }
  if (pack.M() < 2) {
    throw Error(ErrorKind::Numeric, "vg_packing: fewer than two vectors accepted for N=" +
                                        std::to_string(N));
  }
  return pack;
}

std::size_t fano_dimension(std::size_t n, const SobolevSpec& spec) {
  const double e = std::pow(static_cast<double>(n), spec.r / (2.0 * spec.beta + spec.r));
  const double nearest = std::round(e);
  const double snapped = std::abs(e - nearest) <= 1e-9 * std::max(1.0, e) ? nearest : std::ceil(e);
  return static_cast<std::size_t>(snapped);
}

double alternative_amplitude(const SobolevSpec& spec, std::size_t N, double delta) {
  return delta * std::pow(static_cast<double>(N), -(2.0 * spec.beta + spec.r) / (2.0 * spec.r));
}

std::vector<Eigen::VectorXd> hard_alternatives(const Spectrum& s, const SobolevSpec& spec,
                                               double delta, const PackingSet& pack) {
  if (pack.N > s.size()) {
    throw Error(ErrorKind::InvalidArgument, "hard_alternatives: N=" + std::to_string(pack.N) +
                                                " exceeds n=" + std::to_string(s.size()));
  }
  const double amp = alternative_amplitude(spec, pack.N, delta);
  const auto N = static_cast<Eigen::Index>(pack.N);
  std::vector<Eigen::VectorXd> out;
  out.reserve(pack.M() + 1);
  out.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.size())));
  Eigen::VectorXd coeffs(N);
  for (const auto& theta : pack.thetas) {
    for (Eigen::Index j = 0; j < N; ++j) coeffs(j) = amp * theta[static_cast<std::size_t>(j)];
    out.push_back(s.basis.leftCols(N) * coeffs);
  }
  return out;
}

double delta_sobolev_limit(const Spectrum& s, const SobolevSpec& spec, std::size_t N) {
  if (N == 0 || N > s.size()) throw Error(ErrorKind::InvalidArgument, "N outside [1, n]");
  const EllipsoidWeights w = ellipsoid_weights(s, spec);
  const double mass = w.a.head(static_cast<Eigen::Index>(N)).squaredNorm();
  return spec.Q * std::pow(static_cast<double>(N), (2.0 * spec.beta + spec.r) / (2.0 * spec.r)) /
         std::sqrt(mass);
}

double bernoulli_kl(const Eigen::Ref<const Eigen::VectorXd>& rho1,
                    const Eigen::Ref<const Eigen::VectorXd>& rho2) {
  if (rho1.size() != rho2.size()) throw Error(ErrorKind::InvalidArgument, "bernoulli_kl: length mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < rho1.size(); ++i) {
    const double p = rho1(i), q = rho2(i);
    if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0)) {
      throw Error(ErrorKind::InvalidArgument,
                  "bernoulli_kl: probabilities must lie in (0,1) (entry " + std::to_string(i) + ")");
    }
    kl += bernoulli_term(p, 1.0 - p, q, 1.0 - q);
  }
  return kl;
}

KlBoundCheck kl_link_bound_check(const Eigen::Ref<const Eigen::VectorXd>& v1,
                                 const Eigen::Ref<const Eigen::VectorXd>& v2,
                                 const LinkFunction& link) {
  if (v1.size() != v2.size()) throw Error(ErrorKind::InvalidArgument, "kl_link_bound_check: length mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < v1.size(); ++i) {
    kl += bernoulli_term(link.value(v1(i)), link.complement(v1(i)), link.value(v2(i)),
                         link.complement(v2(i)));
  }
  const double c = link.sup_derivative_ratio * link.sup_derivative;
  const double bound = c * (v1 - v2).squaredNorm();
  return {kl, bound, kl <= bound + 1e-12};
}

double alternative_kl(const FanoModel& model, const Eigen::Ref<const Eigen::VectorXd>& f) {
  if (model.mode == FanoMode::Regression) {
    return f.squaredNorm() / (2.0 * model.sigma * model.sigma);
  }
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(f.size());
  return kl_link_bound_check(f, zero, *model.link).kl;
}

double calibrate_delta(const Spectrum& s, const SobolevSpec& spec, const PackingSet& pack,
                       const FanoModel& model) {
  const double upper = delta_sobolev_limit(s, spec, pack.N) * (1.0 - kDeltaMargin);
  const auto unit = unit_alternatives(s, spec, pack);
  if (worst_alpha(unit, upper, model) <= kTargetAlpha) return upper;
  double lo = 0.0, hi = upper;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (worst_alpha(unit, mid, model) <= kTargetAlpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

FanoCertificate fano_certificate(const Spectrum& s, const SobolevSpec& spec,
                                 const FanoModel& model, std::uint64_t seed) {
  const std::size_t n = s.size();
  const std::size_t N = fano_dimension(n, spec);
  if (N < 8) {
    throw Error(ErrorKind::Validation, "n too small for packing (N=" + std::to_string(N) +
                                           " < 8 at n=" + std::to_string(n) + ")");
  }
  if (N > n) throw Error(ErrorKind::InvalidArgument, "packing dimension exceeds n");
  if (model.mode == FanoMode::Regression && !(model.sigma > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "regression certificate needs sigma > 0");
  }

  const PackingSet pack = vg_packing(N, seed);
  const double delta = calibrate_delta(s, spec, pack, model);
  const auto alts = hard_alternatives(s, spec, delta, pack);
  const std::size_t M = pack.M();

  FanoCertificate cert{};
  cert.n = n;
  cert.beta = spec.beta;
  cert.r = spec.r;
  cert.Q = spec.Q;
  cert.seed = seed;
  cert.mode = model.mode;
  cert.N = N;
  cert.M = M;
  cert.min_hamming = pack.min_hamming;
  cert.delta = delta;

  // Pairwise squared distances through the Gram matrix of the alternatives.
  Eigen::MatrixXd F(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(alts.size()));
  for (std::size_t k = 0; k < alts.size(); ++k) F.col(static_cast<Eigen::Index>(k)) = alts[k];
  const Eigen::MatrixXd gram = F.transpose() * F / static_cast<double>(n);
  const double amp = alternative_amplitude(spec, N, delta);
  double min_sq = INFINITY;
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < gram.cols(); ++j) {
      const double d2 = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
      min_sq = std::min(min_sq, d2);
      if (i >= 1) {
        const auto dh = hamming_distance(pack.thetas[static_cast<std::size_t>(i - 1)],
                                         pack.thetas[static_cast<std::size_t>(j - 1)]);
        const double predicted = 4.0 * amp * amp * static_cast<double>(dh);
        cert.max_norm_identity_error =
            std::max(cert.max_norm_identity_error, std::abs(d2 - predicted) / predicted);
      }
    }
  }
  cert.separation_min = std::sqrt(std::max(0.0, min_sq));

  double kl_sum = 0.0;
  cert.sobolev_max = 0.0;
  for (std::size_t j = 1; j < alts.size(); ++j) {
    cert.sobolev_max = std::max(cert.sobolev_max, sobolev_form(s, spec, alts[j]));
    kl_sum += alternative_kl(model, alts[j]);
  }
  cert.kl_budget = kl_sum / static_cast<double>(M + 1);
  cert.alpha = cert.kl_budget / log_m(M);
  cert.fano_bound =
      (std::log(static_cast<double>(M + 1)) - std::log(2.0)) / log_m(M) - cert.alpha;
  cert.valid = cert.sobolev_max <= spec.radius_squared() && cert.alpha < 1.0 &&
               cert.separation_min > 0.0;
  return cert;
}

bool revalidate(const FanoCertificate& cert, const Spectrum& s, const FanoModel& model) {
  const FanoCertificate again =
      fano_certificate(s, SobolevSpec(cert.beta, cert.Q, cert.r), model, cert.seed);
  return again.valid == cert.valid && again.N == cert.N && again.M == cert.M &&
         again.min_hamming == cert.min_hamming && again.delta == cert.delta &&
         again.separation_min == cert.separation_min && again.sobolev_max == cert.sobolev_max &&
         again.kl_budget == cert.kl_budget && again.alpha == cert.alpha &&
         again.fano_bound == cert.fano_bound;
}

void write_certificate_csv(std::ostream& out, const FanoCertificate& c) {
  out << "n,beta,r,Q,N,M,delta,separation_min,sobolev_max,kl_budget,alpha,fano_bound,valid,seed\n";
  write_csv_row(out, {std::to_string(c.n), format_number(c.beta), format_number(c.r),
                      format_number(c.Q), std::to_string(c.N), std::to_string(c.M),
                      format_number(c.delta), format_number(c.separation_min),
                      format_number(c.sobolev_max), format_number(c.kl_budget),
                      format_number(c.alpha), format_number(c.fano_bound),
                      c.valid ? "true" : "false", std::to_string(c.seed)});
}

Eigen::VectorXd worst_case_prior_sample(const ShrinkagePlan& plan, const EllipsoidWeights& w,
                                        double delta_prior, std::uint64_t seed) {
  if (!(delta_prior > 0.0 && delta_prior < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "prior delta must lie in (0,1)");
  }
  const Eigen::VectorXd v2 = worst_case_variances(plan, w);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(w.a.size());
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(plan.N); ++j) {
    f(j) = std::sqrt((1.0 - delta_prior) * v2(j)) * normal(rng);
  }
  return f;
}

PriorBayesRisk prior_bayes_risk(const ShrinkagePlan& plan, const EllipsoidWeights& w,
                                double delta_prior, std::size_t draws, std::uint64_t seed) {
  if (draws < 2) throw Error(ErrorKind::InvalidArgument, "prior_bayes_risk: need at least 2 draws");
  double sum = 0.0, sum_sq = 0.0, form = 0.0;
  const auto N = static_cast<Eigen::Index>(plan.N);
  for (std::size_t d = 0; d < draws; ++d) {
    const Eigen::VectorXd f = worst_case_prior_sample(plan, w, delta_prior, derive_seed(seed, d, 0));
    std::mt19937_64 noise_rng(derive_seed(seed, d, 1));
    std::normal_distribution<double> normal(0.0, 1.0);
    double loss = 0.0;
    // Coefficients at and above N have zero weight and zero prior mass.
    for (Eigen::Index j = 0; j < N; ++j) {
      const double z = f(j) + plan.epsilon * normal(noise_rng);
      const double e = plan.l(j) * z - f(j);
      loss += e * e;
    }
    sum += loss;
    sum_sq += loss * loss;
    form += (w.a.array().square() * f.array().square()).sum();
  }
  const auto k = static_cast<double>(draws);
  PriorBayesRisk out{};
  out.empirical = sum / k;
  out.standard_error = std::sqrt(std::max(0.0, (sum_sq / k - out.empirical * out.empirical)) / (k - 1.0));
  out.S = plan.S;
  out.lower = 0.8 * (1.0 - delta_prior) * plan.S;
  out.upper = 1.05 * plan.S;
  out.mean_ellipsoid_form = form / k;
  out.within_band = out.empirical >= out.lower && out.empirical <= out.upper;
  return out;
}

}  // namespace grate
