#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "grate/estimator.hpp"
#include "grate/graph.hpp"
#include "grate/sobolev.hpp"
#include "grate/spectral.hpp"

namespace grate {

struct GraphFamily {
  enum class Kind { Path, Grid, Torus, SmallWorld, EdgeList };

  Kind kind = Kind::Path;
  std::size_t dims = 1;       // grid / torus dimension
  std::size_t k = 4;          // small-world neighbours
  double p = 0.1;             // small-world rewiring probability
  std::uint64_t seed = 1;     // small-world seed
  std::string file;           // edge-list path

  static GraphFamily path() { return {}; }
  static GraphFamily grid(std::size_t d) {
    GraphFamily f;
    f.kind = Kind::Grid;
    f.dims = d;
    return f;
  }
  static GraphFamily torus(std::size_t d) {
    GraphFamily f = grid(d);
    f.kind = Kind::Torus;
    return f;
  }
  static GraphFamily small_world(std::size_t k, double p, std::uint64_t seed) {
    GraphFamily f;
    f.kind = Kind::SmallWorld;
    f.k = k;
    f.p = p;
    f.seed = seed;
    return f;
  }
  static GraphFamily edge_list(std::string path) {
    GraphFamily f;
    f.kind = Kind::EdgeList;
    f.file = std::move(path);
    return f;
  }

  /// Comma-free label used in CSV output.
  std::string label() const;

  /// Member of the family with n vertices. Grid and torus sizes must be
  /// perfect d-th powers; edge lists must have exactly n vertices.
  Graph build(std::size_t n) const;

  /// Geometry parameter known in closed form (path 1, grid/torus d).
  std::optional<double> known_r() const;
};

enum class EstimatorKind { Pinsker, Projection, ClassificationDirect, ClassificationLink };

const char* to_string(EstimatorKind kind) noexcept;
EstimatorKind parse_estimator(const std::string& name);

struct ExperimentSpec {
  GraphFamily family;
  std::vector<std::size_t> n_values;
  double beta = 1.0;
  double Q = 1.0;
  double sigma = 1.0;
  EstimatorKind estimator = EstimatorKind::Pinsker;
  std::size_t reps = 50;
  std::uint64_t seed = 1;
  double fill = 1.0;        // 0 means the zero function (rho = 1/2 for classification)
  std::size_t threads = 1;  // replicate-level parallelism
};

struct ReplicateRow {
  std::size_t n;
  std::size_t rep;
  std::uint64_t seed;
  double risk;
};

struct SizeSummary {
  std::size_t n;
  double r_used;
  double mean_risk;
  double standard_error;
  std::size_t cutoff;     // plan N or projection m
  double plan_risk;       // S for Pinsker plans, NaN otherwise
  double sup_risk;        // analytic sup over the ellipsoid for linear estimators, NaN otherwise
};

struct RateFit {
  double slope;
  std::optional<double> standard_error;  // empty with only two sizes
};

struct RateReport {
  std::string family;
  EstimatorKind estimator;
  double beta;
  double Q;
  double sigma;
  std::vector<ReplicateRow> rows;  // ascending n, then rep
  std::vector<SizeSummary> sizes;
  std::optional<RateFit> fit;
  double r_used;                   // mean over sizes
  double theory_slope;             // -2 beta / (2 beta + r_used)
  bool degenerate = false;
  std::vector<std::string> warnings;
};

/// OLS slope of log(mean risk) on log(n). Throws Numeric on non-positive
/// risks and InvalidArgument with fewer than two distinct sizes.
RateFit fit_rate(std::span<const double> ns, std::span<const double> mean_risks);

// Memoizes spectra (and fitted r for families without a closed form) per
// (family, n). Not thread-safe.
class SpectrumCache {
 public:
  struct Entry {
    Spectrum spectrum;
    double r;
  };
  const Entry& get(const GraphFamily& family, std::size_t n);
  void clear() { entries_.clear(); }

 private:
  std::map<std::pair<std::string, std::size_t>, Entry> entries_;
};

struct RegressionReplicate {
  Eigen::VectorXd f;
  Eigen::VectorXd y;
  Eigen::VectorXd f_hat;
  double risk;
};

/// One regression draw: f from the ball, y = f + sigma xi, estimate, risk.
/// `weights` are the coefficient weights of a linear estimator.
RegressionReplicate simulate_regression_replicate(const Spectrum& s, const EllipsoidWeights& w,
                                                  const Eigen::VectorXd& weights, double sigma,
                                                  double fill, std::uint64_t seed);

struct ClassificationReplicate {
  Eigen::VectorXd rho;
  Eigen::VectorXd y;
  Eigen::VectorXd rho_hat;
  double risk;
};

ClassificationReplicate simulate_classification_replicate(const Spectrum& s,
                                                          const EllipsoidWeights& w,
                                                          const ShrinkagePlan& plan,
                                                          ClassificationMode mode, double fill,
                                                          std::uint64_t seed);

RateReport run_regression_experiment(const ExperimentSpec& spec, SpectrumCache* cache = nullptr);
RateReport run_classification_experiment(const ExperimentSpec& spec, SpectrumCache* cache = nullptr);

/// Dispatches on spec.estimator.
RateReport run_experiment(const ExperimentSpec& spec, SpectrumCache* cache = nullptr);

/// "family,n,beta,Q,sigma,r_used,estimator,rep,seed,risk"
void write_results_csv(std::ostream& out, const RateReport& report);
/// "family,estimator,beta,r_used,slope,stderr,theory_slope"
void write_aggregate_csv(std::ostream& out, const RateReport& report);

}  // namespace grate
