#include "grate/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <thread>

#include "grate/csv.hpp"
#include "grate/error.hpp"
#include "grate/seeds.hpp"

namespace grate {
namespace {

constexpr double kZeroRisk = 1e-12;

std::size_t integer_root(std::size_t n, std::size_t d) {
  const auto m = static_cast<std::size_t>(
      std::llround(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d))));
  std::size_t check = 1;
  for (std::size_t k = 0; k < d; ++k) check *= m;
  if (check != n) {
    throw Error(ErrorKind::InvalidArgument, "n=" + std::to_string(n) + " is not a perfect " +
                                                std::to_string(d) + "-th power");
  }
  return m;
}

// Runs body(i) for i in [0, count) over up to `threads` workers. Each index
// writes its own slot, so results do not depend on scheduling.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < count; i += threads) body(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void validate(const ExperimentSpec& spec) {
  if (spec.n_values.empty()) throw Error(ErrorKind::InvalidArgument, "n_values must not be empty");
  for (std::size_t i = 1; i < spec.n_values.size(); ++i) {
    if (spec.n_values[i] <= spec.n_values[i - 1]) {
      throw Error(ErrorKind::InvalidArgument, "n_values must be strictly increasing");
    }
  }
  if (spec.reps < 1) throw Error(ErrorKind::InvalidArgument, "reps must be >= 1");
  if (!(spec.fill >= 0.0 && spec.fill <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "fill must lie in [0,1]");
  }
  if (!(spec.sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma must be non-negative");
}

Eigen::VectorXd draw_ball(const Spectrum& s, const EllipsoidWeights& w, double fill,
                          std::uint64_t seed) {
  if (fill == 0.0) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.size()));
  return gft_inverse(s, sample_ball_coefficients(w, fill, seed));
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

struct SizeContext {
  const Spectrum* spectrum;
  double r;
  SobolevSpec sobolev;
  EllipsoidWeights weights;
};

template <typename RunSize>
RateReport run_sizes(const ExperimentSpec& spec, SpectrumCache* cache, RunSize&& run_size) {
  validate(spec);
  SpectrumCache local;
  SpectrumCache& spectra = cache ? *cache : local;

  RateReport report;
  report.family = spec.family.label();
  report.estimator = spec.estimator;
  report.beta = spec.beta;
  report.Q = spec.Q;
  report.sigma = spec.sigma;

  for (std::size_t n : spec.n_values) {
    try {
      const auto& entry = spectra.get(spec.family, n);
      const SobolevSpec sobolev(spec.beta, spec.Q, entry.r);
      SizeContext ctx{&entry.spectrum, entry.r, sobolev, ellipsoid_weights(entry.spectrum, sobolev)};
      std::vector<double> risks(spec.reps);
      std::vector<std::uint64_t> seeds(spec.reps);
      SizeSummary summary = run_size(ctx, spec, n, risks, seeds, report);
      for (std::size_t rep = 0; rep < spec.reps; ++rep) {
        report.rows.push_back({n, rep, seeds[rep], risks[rep]});
      }
      summary.n = n;
      summary.r_used = entry.r;
      summary.mean_risk = mean(risks);
      summary.standard_error = standard_error(risks);
      report.sizes.push_back(summary);
    } catch (const Error& e) {
      throw e.with_context("n=" + std::to_string(n));
    }
  }

  double r_sum = 0.0;
  for (const auto& s : report.sizes) r_sum += s.r_used;
  report.r_used = r_sum / static_cast<double>(report.sizes.size());
  report.theory_slope = -2.0 * spec.beta / (2.0 * spec.beta + report.r_used);

  const bool all_zero = std::all_of(report.sizes.begin(), report.sizes.end(),
                                    [](const SizeSummary& s) { return s.mean_risk < kZeroRisk; });
  if (all_zero) {
    report.degenerate = true;
    report.warnings.push_back("degenerate: zero risk");
  } else if (report.sizes.size() < 2) {
    report.warnings.push_back("rate fit needs at least two sizes");
  } else {
    std::vector<double> ns, risks;
    for (const auto& s : report.sizes) {
      ns.push_back(static_cast<double>(s.n));
      risks.push_back(s.mean_risk);
    }
    report.fit = fit_rate(ns, risks);
  }
  return report;
}

std::string na_or(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

}  // namespace

std::string GraphFamily::label() const {
  switch (kind) {
    case Kind::Path: return "path";
    case Kind::Grid: return "grid" + std::to_string(dims) + "d";
    case Kind::Torus: return "torus" + std::to_string(dims) + "d";
    case Kind::SmallWorld:
      return "ws-k" + std::to_string(k) + "-p" + format_number(p) + "-s" + std::to_string(seed);
    case Kind::EdgeList: {
      const auto slash = file.find_last_of('/');
      std::string base = slash == std::string::npos ? file : file.substr(slash + 1);
      std::replace(base.begin(), base.end(), ',', '_');
      return "file-" + base;
    }
  }
  return "unknown";
}

Graph GraphFamily::build(std::size_t n) const {
  switch (kind) {
    case Kind::Path: return build_path(n);
    case Kind::Grid:
    case Kind::Torus: {
      const std::vector<std::size_t> d(dims, integer_root(n, dims));
      return kind == Kind::Grid ? build_grid(d) : build_torus(d);
    }
    case Kind::SmallWorld: return build_small_world(n, k, p, seed).graph;
    case Kind::EdgeList: {
      std::ifstream in(file);
      if (!in) throw Error(ErrorKind::Io, "cannot open edge list '" + file + "'");
      Graph g = load_edge_list(in);
      if (g.size() != n) {
        throw Error(ErrorKind::InvalidArgument, "edge list has " + std::to_string(g.size()) +
                                                    " vertices, requested n=" + std::to_string(n));
      }
      return g;
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown graph family");
}

std::optional<double> GraphFamily::known_r() const {
  switch (kind) {
    case Kind::Path: return 1.0;
    case Kind::Grid:
    case Kind::Torus: return static_cast<double>(dims);
    default: return std::nullopt;
  }
}

const char* to_string(EstimatorKind kind) noexcept {
  switch (kind) {
    case EstimatorKind::Pinsker: return "pinsker";
    case EstimatorKind::Projection: return "projection";
    case EstimatorKind::ClassificationDirect: return "classification-direct";
    case EstimatorKind::ClassificationLink: return "classification-link";
  }
  return "unknown";
}

EstimatorKind parse_estimator(const std::string& name) {
  for (auto k : {EstimatorKind::Pinsker, EstimatorKind::Projection,
                 EstimatorKind::ClassificationDirect, EstimatorKind::ClassificationLink}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown estimator '" + name + "'");
}

RateFit fit_rate(std::span<const double> ns, std::span<const double> mean_risks) {
  if (ns.size() != mean_risks.size()) throw Error(ErrorKind::InvalidArgument, "fit_rate: length mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(mean_risks[i] > 0.0)) {
      throw Error(ErrorKind::Numeric, "fit_rate: non-positive mean risk at n=" + format_number(ns[i]));
    }
    xs.push_back(std::log(ns[i]));
    ys.push_back(std::log(mean_risks[i]));
  }
  const std::size_t k = xs.size();
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(k);
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (k < 2 || !(sxx > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "fit_rate: needs at least two distinct sizes");
  }
  RateFit fit{sxy / sxx, std::nullopt};
  if (k > 2) {
    const double intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double e = ys[i] - intercept - fit.slope * xs[i];
      rss += e * e;
    }
    fit.standard_error = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
  }
  return fit;
}

const SpectrumCache::Entry& SpectrumCache::get(const GraphFamily& family, std::size_t n) {
  const auto key = std::make_pair(family.label(), n);
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  Spectrum s = eigendecompose(family.build(n));
  double r = 0.0;
  if (auto known = family.known_r()) {
    r = *known;
  } else {
    r = fit_geometry(s).r_hat;
  }
  return entries_.emplace(key, Entry{std::move(s), r}).first->second;
}

RegressionReplicate simulate_regression_replicate(const Spectrum& s, const EllipsoidWeights& w,
                                                  const Eigen::VectorXd& weights, double sigma,
                                                  double fill, std::uint64_t seed) {
  RegressionReplicate out;
  out.f = draw_ball(s, w, fill, derive_seed(seed, 1));
  std::mt19937_64 rng(derive_seed(seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  out.y = out.f;
  for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y(i) += sigma * normal(rng);
  out.f_hat = shrink(s, weights, out.y);
  out.risk = norm_n_squared(out.f_hat - out.f);
  return out;
}

ClassificationReplicate simulate_classification_replicate(const Spectrum& s,
                                                          const EllipsoidWeights& w,
                                                          const ShrinkagePlan& plan,
                                                          ClassificationMode mode, double fill,
                                                          std::uint64_t seed) {
  const LinkFunction& link = sigmoid_link();
  ClassificationReplicate out;
  out.rho = draw_ball(s, w, fill, derive_seed(seed, 1)).unaryExpr(link.value);
  std::mt19937_64 rng(derive_seed(seed, 2));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  out.y.resize(out.rho.size());
  for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y(i) = unit(rng) < out.rho(i) ? 1.0 : 0.0;
  out.rho_hat = estimate_classification(s, plan, out.y, mode, link);
  out.risk = norm_n_squared(out.rho_hat - out.rho);
  return out;
}

RateReport run_regression_experiment(const ExperimentSpec& spec, SpectrumCache* cache) {
  if (spec.estimator != EstimatorKind::Pinsker && spec.estimator != EstimatorKind::Projection) {
    throw Error(ErrorKind::InvalidArgument, std::string("estimator '") + to_string(spec.estimator) +
                                                "' is not a regression estimator");
  }
  return run_sizes(spec, cache, [](const SizeContext& ctx, const ExperimentSpec& spec,
                                   std::size_t n, std::vector<double>& risks,
                                   std::vector<std::uint64_t>& seeds, RateReport&) {
    const Spectrum& s = *ctx.spectrum;
    SizeSummary summary{};
    Eigen::VectorXd weights;
    double epsilon = spec.sigma / std::sqrt(static_cast<double>(n));
    if (spec.estimator == EstimatorKind::Pinsker) {
      const ShrinkagePlan plan = pinsker_plan(ctx.weights, spec.sigma, n);
      weights = plan.l;
      summary.cutoff = plan.N;
      summary.plan_risk = plan.S;
    } else {
      summary.cutoff = projection_cutoff(n, ctx.sobolev);
      weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      weights.head(static_cast<Eigen::Index>(summary.cutoff)).setOnes();
      summary.plan_risk = NAN;
    }
    summary.sup_risk = sup_risk_over_ellipsoid(weights, ctx.weights, epsilon);
    for (std::size_t rep = 0; rep < spec.reps; ++rep) seeds[rep] = derive_seed(spec.seed, n, rep);
    parallel_for(spec.reps, spec.threads, [&](std::size_t rep) {
      risks[rep] =
          simulate_regression_replicate(s, ctx.weights, weights, spec.sigma, spec.fill, seeds[rep]).risk;
    });
    return summary;
  });
}

RateReport run_classification_experiment(const ExperimentSpec& spec, SpectrumCache* cache) {
  if (spec.estimator != EstimatorKind::ClassificationDirect &&
      spec.estimator != EstimatorKind::ClassificationLink) {
    throw Error(ErrorKind::InvalidArgument, std::string("estimator '") + to_string(spec.estimator) +
                                                "' is not a classification estimator");
  }
  if (!(spec.sigma > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "classification plans need sigma > 0");
  }
  const auto mode = spec.estimator == EstimatorKind::ClassificationLink ? ClassificationMode::Link
                                                                        : ClassificationMode::Direct;
  RateReport report = run_sizes(spec, cache, [mode](const SizeContext& ctx, const ExperimentSpec& spec,
                                                    std::size_t n, std::vector<double>& risks,
                                                    std::vector<std::uint64_t>& seeds,
                                                    RateReport& rep_report) {
    if (spec.beta < ctx.r / 2.0) {
      const std::string msg = "beta=" + format_number(spec.beta) + " < r/2=" +
                              format_number(ctx.r / 2.0) +
                              ": outside the beta >= r/2 regime of the classification rate";
      if (std::find(rep_report.warnings.begin(), rep_report.warnings.end(), msg) ==
          rep_report.warnings.end()) {
        rep_report.warnings.push_back(msg);
      }
    }
    const ShrinkagePlan plan = pinsker_plan(ctx.weights, spec.sigma, n);
    SizeSummary summary{};
    summary.cutoff = plan.N;
    summary.plan_risk = plan.S;
    summary.sup_risk = NAN;
    for (std::size_t rep = 0; rep < spec.reps; ++rep) seeds[rep] = derive_seed(spec.seed, n, rep);
    parallel_for(spec.reps, spec.threads, [&](std::size_t rep) {
      risks[rep] = simulate_classification_replicate(*ctx.spectrum, ctx.weights, plan, mode,
                                                     spec.fill, seeds[rep])
                       .risk;
    });
    return summary;
  });
  return report;
}

RateReport run_experiment(const ExperimentSpec& spec, SpectrumCache* cache) {
  switch (spec.estimator) {
    case EstimatorKind::Pinsker:
    case EstimatorKind::Projection: return run_regression_experiment(spec, cache);
    default: return run_classification_experiment(spec, cache);
  }
}

void write_results_csv(std::ostream& out, const RateReport& report) {
  out << "family,n,beta,Q,sigma,r_used,estimator,rep,seed,risk\n";
  std::size_t size_idx = 0;
  for (const auto& row : report.rows) {
    while (report.sizes[size_idx].n != row.n) ++size_idx;
    write_csv_row(out, {report.family, std::to_string(row.n), format_number(report.beta),
                        format_number(report.Q), format_number(report.sigma),
                        format_number(report.sizes[size_idx].r_used), to_string(report.estimator),
                        std::to_string(row.rep), std::to_string(row.seed), format_number(row.risk)});
  }
}

void write_aggregate_csv(std::ostream& out, const RateReport& report) {
  out << "family,estimator,beta,r_used,slope,stderr,theory_slope\n";
  std::string slope = "NA", se = "NA";
  if (report.fit) {
    slope = format_number(report.fit->slope);
    se = na_or(report.fit->standard_error);
  }
  write_csv_row(out, {report.family, to_string(report.estimator), format_number(report.beta),
                      format_number(report.r_used), slope, se,
                      format_number(report.theory_slope)});
}

}  // namespace grate
