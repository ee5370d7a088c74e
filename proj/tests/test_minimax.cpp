#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "grate/error.hpp"
#include "grate/minimax.hpp"

using namespace grate;

namespace {

Eigen::VectorXd normal_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = normal(rng);
  return v;
}

}  // namespace

TEST_CASE("packing examples") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const PackingSet p = vg_packing(8, seed);
    CHECK(p.M() >= 2);
    CHECK(p.min_hamming >= 1);
  }
  const PackingSet p64 = vg_packing(64, 1);
  CHECK(p64.M() >= 256);
  CHECK(p64.min_hamming >= 8);
  CHECK_THROWS_AS(vg_packing(7, 1), Error);
}

TEST_CASE("packing invariants and determinism") {
  for (std::size_t N : {8u, 16u, 32u, 64u}) {
    const PackingSet p = vg_packing(N, 11);
    const PackingSet q = vg_packing(N, 11);
    CHECK(p.thetas == q.thetas);
    CHECK(p.M() >= static_cast<std::size_t>(std::floor(std::exp2(N / 8.0))));
    std::size_t min_d = N;
    std::set<std::vector<std::int8_t>> distinct;
    for (std::size_t i = 0; i < p.M(); ++i) {
      REQUIRE(p.thetas[i].size() == N);
      for (auto v : p.thetas[i]) CHECK((v == 1 || v == -1));
      distinct.insert(p.thetas[i]);
      for (std::size_t j = i + 1; j < p.M(); ++j) min_d = std::min(min_d, hamming_distance(p.thetas[i], p.thetas[j]));
    }
    CHECK(distinct.size() == p.M());
    CHECK(min_d == p.min_hamming);
    CHECK(min_d >= (N + 7) / 8);
  }
  CHECK(vg_packing(32, 1).thetas != vg_packing(32, 2).thetas);
}

TEST_CASE("hamming distance counts disagreements") {
  CHECK(hamming_distance({1, 1, -1, -1}, {1, -1, -1, 1}) == 2);
  CHECK(hamming_distance({1, 1}, {1, 1}) == 0);
}

TEST_CASE("fano dimension") {
  CHECK(fano_dimension(4096, SobolevSpec(1.0, 1.0, 1.0)) == 16);
  CHECK(fano_dimension(1024, SobolevSpec(1.0, 1.0, 1.0)) == 11);
  CHECK(fano_dimension(4096, SobolevSpec(1.0, 1.0, 2.0)) == 64);
  CHECK(fano_dimension(16, SobolevSpec(1.0, 1.0, 1.0)) == 3);
}

TEST_CASE("hard alternatives") {
  const std::size_t n = 256;
  const Spectrum s = path_spectrum_closed_form(n);
  const SobolevSpec spec(1.0, 1.0, 1.0);
  const std::size_t N = 12;
  const PackingSet pack = vg_packing(N, 4);
  const double delta = 0.37;
  const auto alts = hard_alternatives(s, spec, delta, pack);
  REQUIRE(alts.size() == pack.M() + 1);
  CHECK(alts[0].cwiseAbs().maxCoeff() == 0.0);

  const double t = alternative_amplitude(spec, N, delta);
  CHECK(t == doctest::Approx(delta * std::pow(12.0, -1.5)).epsilon(1e-14));

  // All-plus theta gives coefficients (t, ..., t, 0, ...).
  PackingSet plus{N, {std::vector<std::int8_t>(N, 1), std::vector<std::int8_t>(N, -1)}, N};
  const auto pm = hard_alternatives(s, spec, delta, plus);
  const Eigen::VectorXd c = gft_forward(s, pm[1]);
  CHECK((c.head(N).array() - t).abs().maxCoeff() < 1e-12);
  CHECK(c.tail(n - N).cwiseAbs().maxCoeff() < 1e-12);

  double sum_w = 0.0;
  for (std::size_t j = 0; j < N; ++j) sum_w += 1.0 + n * n * s.lambdas(j);
  for (std::size_t i = 1; i < alts.size(); ++i) {
    const double form = sobolev_form(s, spec, alts[i]);
    CHECK(std::abs(form - t * t * sum_w) <= 1e-9 * form);
    for (std::size_t j = i + 1; j < alts.size(); ++j) {
      const double d = norm_n_squared(alts[i] - alts[j]);
      const double want = 4.0 * t * t * static_cast<double>(hamming_distance(pack.thetas[i - 1], pack.thetas[j - 1]));
      CHECK(std::abs(d - want) <= 1e-10 * want);
    }
  }

  const double da = delta_sobolev_limit(s, spec, N);
  CHECK(da == doctest::Approx(std::pow(12.0, 1.5) / std::sqrt(sum_w)).epsilon(1e-13));
  CHECK(std::abs(sobolev_form(s, spec, hard_alternatives(s, spec, da, pack)[1]) - 1.0) < 1e-9);

  PackingSet too_long{n + 1, {std::vector<std::int8_t>(n + 1, 1), std::vector<std::int8_t>(n + 1, -1)}, n + 1};
  CHECK_THROWS_AS(hard_alternatives(s, spec, delta, too_long), Error);
}

TEST_CASE("bernoulli KL") {
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.5), b = Eigen::VectorXd::Constant(1, 0.25);
  CHECK(std::abs(bernoulli_kl(a, b) - (0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0))) < 1e-15);
  CHECK(std::abs(bernoulli_kl(a, b) - 0.143841) < 1e-6);
  CHECK(bernoulli_kl(b, b) == 0.0);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unif(0.001, 0.999);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd p(20), q(20);
    for (int i = 0; i < 20; ++i) {
      p(i) = unif(rng);
      q(i) = unif(rng);
    }
    const double kl = bernoulli_kl(p, q);
    CHECK(kl >= 2.0 * (p - q).squaredNorm() - 1e-12);
  }
  Eigen::VectorXd bad = Eigen::VectorXd::Constant(2, 0.5);
  bad(1) = 1.0;
  CHECK_THROWS_AS(bernoulli_kl(bad, a.replicate(2, 1)), Error);
  CHECK_THROWS_AS(bernoulli_kl(a.replicate(2, 1), bad), Error);
}

TEST_CASE("link KL bound") {
  const std::size_t n = 100;
  std::mt19937_64 rng(1);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto v1 = normal_vector(n, rng), v2 = normal_vector(n, rng);
    const KlBoundCheck c = kl_link_bound_check(v1, v2);
    CHECK(c.bound == doctest::Approx(0.25 * (v1 - v2).squaredNorm()).epsilon(1e-12));
    violations += !c.holds;
  }
  CHECK(violations == 0);

  const auto v = normal_vector(n, rng);
  const KlBoundCheck same = kl_link_bound_check(v, v);
  CHECK(same.kl == 0.0);
  CHECK(same.bound == 0.0);
  CHECK(same.holds);

  // Small-t Taylor expansion: kl ~ n t^2 / 8 against the bound n t^2 / 4.
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  for (double t : {1e-2, 1e-3}) {
    const KlBoundCheck c = kl_link_bound_check(zero, Eigen::VectorXd::Constant(n, t));
    CHECK(c.holds);
    CHECK(c.kl / (n * t * t / 8.0) == doctest::Approx(1.0).epsilon(10 * t * t));
    CHECK(c.kl / c.bound <= 0.5 + 1e-6);
  }
}

TEST_CASE("alternative KL") {
  const Eigen::VectorXd f = (Eigen::VectorXd(3) << 0.1, -0.2, 0.3).finished();
  const FanoModel reg{FanoMode::Regression, 2.0};
  CHECK(alternative_kl(reg, f) == doctest::Approx(0.14 / 8.0).epsilon(1e-14));
  const FanoModel clf{};
  const Eigen::VectorXd half = Eigen::VectorXd::Constant(3, 0.5);
  const Eigen::VectorXd rho = f.unaryExpr([](double t) { return 1.0 / (1.0 + std::exp(-t)); });
  CHECK(alternative_kl(clf, f) == doctest::Approx(bernoulli_kl(rho, half)).epsilon(1e-12));
}

TEST_CASE("fano certificate on path(4096)") {
  const std::size_t n = 4096;
  const Spectrum s = path_spectrum_closed_form(n);
  const SobolevSpec spec(1.0, 1.0, 1.0);
  const FanoModel clf{};
  const FanoCertificate c = fano_certificate(s, spec, clf, 1);
  CHECK(c.valid);
  CHECK(c.N == 16);
  CHECK(c.M >= 4);
  CHECK(c.min_hamming >= 2);
  CHECK(c.alpha <= 0.5);
  CHECK(c.alpha > 0.0);
  CHECK(c.sobolev_max <= 1.0);
  CHECK(c.max_norm_identity_error <= 1e-10);
  const double logM = std::log(static_cast<double>(c.M));
  CHECK(c.fano_bound == doctest::Approx((std::log(c.M + 1.0) - std::log(2.0)) / logM - c.alpha).epsilon(1e-12));
  CHECK(c.fano_bound > 0.0);
  CHECK(c.alpha == doctest::Approx(c.kl_budget / logM).epsilon(1e-12));

  // Separation lower bound from the norm identity and the packing distance.
  const double t = alternative_amplitude(spec, c.N, c.delta);
  CHECK(c.separation_min >= 2.0 * t * std::sqrt(std::ceil(c.N / 8.0)) * (1.0 - 1e-12));

  // Delta is the largest feasible value up to the bisection resolution.
  const PackingSet pack = vg_packing(c.N, 1);
  const double d = calibrate_delta(s, spec, pack, clf);
  CHECK(d == c.delta);
  CHECK(d <= delta_sobolev_limit(s, spec, c.N));
  const auto alts = hard_alternatives(s, spec, d, pack);
  double kl_max = 0.0;
  for (std::size_t j = 1; j < alts.size(); ++j) {
    CHECK(sobolev_form(s, spec, alts[j]) <= 1.0);
    kl_max = std::max(kl_max, alternative_kl(clf, alts[j]));
  }
  CHECK(c.M / (c.M + 1.0) * kl_max / logM <= 0.5);

  CHECK(revalidate(c, s, clf));
  FanoCertificate tampered = c;
  tampered.delta *= 1.01;
  CHECK_FALSE(revalidate(tampered, s, clf));

  std::ostringstream a, b;
  write_certificate_csv(a, c);
  write_certificate_csv(b, fano_certificate(s, spec, clf, 1));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("n,beta,r,Q,N,M,delta,separation_min,sobolev_max,kl_budget,alpha,fano_bound,valid,seed\n", 0) == 0);
}

TEST_CASE("regression certificate and separation scaling") {
  const SobolevSpec spec(1.0, 1.0, 1.0);
  std::vector<double> scaled;
  for (std::size_t n : {1024u, 4096u}) {
    const Spectrum s = path_spectrum_closed_form(n);
    const FanoCertificate reg = fano_certificate(s, spec, FanoModel{FanoMode::Regression, 1.0}, 2);
    CHECK(reg.valid);
    CHECK(reg.alpha <= 0.5);
    const FanoCertificate clf = fano_certificate(s, spec, FanoModel{}, 2);
    CHECK(clf.valid);
    scaled.push_back(clf.separation_min * std::cbrt(static_cast<double>(n)));
  }
  CHECK(std::max(scaled[0], scaled[1]) / std::min(scaled[0], scaled[1]) <= 2.0);
}

TEST_CASE("certificate needs N >= 8") {
  const Spectrum s = path_spectrum_closed_form(16);
  try {
    fano_certificate(s, SobolevSpec(1.0, 1.0, 1.0), FanoModel{}, 1);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(std::string(e.what()).find("n too small for packing") != std::string::npos);
  }
}

TEST_CASE("worst-case prior") {
  const std::size_t n = 1024;
  const EllipsoidWeights w = ellipsoid_weights(path_eigenvalues(n), SobolevSpec(1.0, 1.0, 1.0));
  const ShrinkagePlan plan = pinsker_plan(w, 1.0, n);
  const Eigen::VectorXd v2 = worst_case_variances(plan, w);

  SUBCASE("draws and expected form") {
    const double delta = 0.1;
    double mean_form = 0.0;
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
      const Eigen::VectorXd f = worst_case_prior_sample(plan, w, delta, 100 + d);
      CHECK(f.tail(n - plan.N).cwiseAbs().maxCoeff() == 0.0);
      mean_form += (w.a.array().square() * f.array().square()).sum() / draws;
    }
    CHECK(std::abs(mean_form / ((1.0 - delta) * w.R) - 1.0) < 0.02);
    CHECK((worst_case_prior_sample(plan, w, delta, 5) - worst_case_prior_sample(plan, w, delta, 5)).norm() == 0.0);
    CHECK(worst_case_prior_sample(plan, w, 1.0 - 1e-12, 3).cwiseAbs().maxCoeff() < 1e-5);
    CHECK_THROWS_AS(worst_case_prior_sample(plan, w, 0.0, 1), Error);
    CHECK_THROWS_AS(worst_case_prior_sample(plan, w, 1.0, 1), Error);
  }

  SUBCASE("Bayes risk band") {
    const PriorBayesRisk b = prior_bayes_risk(plan, w, 0.1, 5000, 9);
    CHECK(b.S == plan.S);
    CHECK(b.lower == doctest::Approx(0.8 * 0.9 * plan.S));
    CHECK(b.upper == doctest::Approx(1.05 * plan.S));
    CHECK(b.within_band);
    CHECK(b.empirical >= b.lower);
    CHECK(b.empirical <= b.upper);
    // Exact Bayes risk of the linear plan: sum_j (1 - l_j)^2 s_j + eps^2 l_j^2.
    const Eigen::VectorXd sj = 0.9 * v2;
    const double exact = ((1.0 - plan.l.array()).square() * sj.array()).sum() +
                         plan.epsilon * plan.epsilon * plan.l.squaredNorm();
    CHECK(std::abs(b.empirical - exact) <= 4.0 * b.standard_error);
    const PriorBayesRisk again = prior_bayes_risk(plan, w, 0.1, 5000, 9);
    CHECK(again.empirical == b.empirical);
  }
}
