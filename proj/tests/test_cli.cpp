#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "grate/csv.hpp"
#include "grate/harness.hpp"
#include "grate/seeds.hpp"

namespace fs = std::filesystem;
using namespace grate;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "grate");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("grate_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_signal(const std::string& path, const std::string& header, const Eigen::VectorXd& v) {
  std::ofstream out(path);
  out << header << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << i << ',' << format_number(v(i)) << '\n';
}

Eigen::VectorXd read_signal(const std::string& path, const std::string& header, std::size_t n) {
  std::ifstream in(path);
  const auto col = read_indexed_column(in, header, n);
  return Eigen::Map<const Eigen::VectorXd>(col.data(), static_cast<Eigen::Index>(col.size()));
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run_cli({}).code == cli::kExitValidation);
  CHECK(run_cli({"bogus"}).code == cli::kExitValidation);
  CHECK(run_cli({"spectrum", "--graph", "path:4", "--out", "x.csv", "--unknown", "1"}).code ==
        cli::kExitValidation);
  CHECK(run_cli({"spectrum", "--graph", "path:4"}).code == cli::kExitValidation);
  CHECK(run_cli({"--help"}).code == cli::kExitOk);
}

TEST_CASE("spectrum") {
  TempDir tmp;
  const auto p = run_cli({"spectrum", "--graph", "path:4", "--out", tmp.file("p4.csv")});
  CHECK(p.code == 0);
  CHECK(p.out == "n=4\nlambda_1=0.585786437627\n");
  CHECK(slurp(tmp.file("p4.csv")) == "j,lambda\n0,0\n1,0.585786437627\n2,2\n3,3.41421356237\n");

  CHECK(run_cli({"spectrum", "--graph", "grid:2x2", "--out", tmp.file("g.csv")}).code == 0);
  CHECK(slurp(tmp.file("g.csv")) == "j,lambda\n0,0\n1,2\n2,2\n3,4\n");

  const auto missing = run_cli({"spectrum", "--graph", "file:missing.txt", "--out", tmp.file("m.csv")});
  CHECK(missing.code == cli::kExitIo);
  CHECK(missing.err.find("missing.txt") != std::string::npos);
  CHECK(run_cli({"spectrum", "--graph", "path:4", "--out", tmp.file("no/such/dir/x.csv")}).code == cli::kExitIo);
  CHECK(run_cli({"spectrum", "--graph", "ring:4", "--out", tmp.file("r.csv")}).code == cli::kExitValidation);
  CHECK(run_cli({"spectrum", "--graph", "path:1", "--out", tmp.file("r.csv")}).code == cli::kExitValidation);

  {
    std::ofstream edges(tmp.file("edges.txt"));
    edges << "0 1\n2 3\n";
  }
  const auto split = run_cli({"spectrum", "--graph", "file:" + tmp.file("edges.txt"), "--out", tmp.file("e.csv")});
  CHECK(split.code == cli::kExitValidation);
  CHECK(split.err.find("disconnected") != std::string::npos);
}

TEST_CASE("fit-r") {
  const auto p = run_cli({"fit-r", "--graph", "path:2048"});
  CHECK(p.code == 0);
  const auto pos = p.out.find("r_hat=");
  REQUIRE(pos != std::string::npos);
  const double r = std::stod(p.out.substr(pos + 6));
  CHECK(r >= 0.95);
  CHECK(r <= 1.05);

  const auto ws = run_cli({"fit-r", "--graph", "ws:1000,4,0.1,1"});
  CHECK(ws.code == 0);
  CHECK(ws.out.find("1.4") != std::string::npos);
  CHECK(run_cli({"fit-r", "--graph", "path:20", "--i0", "10"}).code == cli::kExitValidation);
}

TEST_CASE("denoise") {
  TempDir tmp;
  const std::size_t n = 64;
  const Spectrum s = eigendecompose(build_path(n));
  const SobolevSpec spec(1.0, 1.0, 1.0);
  const EllipsoidWeights w = ellipsoid_weights(s, spec);
  const ShrinkagePlan plan = pinsker_plan(w, 1.0, n);

  SUBCASE("tiny sigma returns the input") {
    const RegressionReplicate rep = simulate_regression_replicate(s, w, plan.l, 1.0, 1.0, 3);
    write_signal(tmp.file("obs.csv"), "i,y", rep.y);
    const auto r = run_cli({"denoise", "--graph", "path:64", "--obs", tmp.file("obs.csv"), "--sigma", "1e-9",
                            "--out", tmp.file("fhat.csv")});
    CHECK(r.code == 0);
    const Eigen::VectorXd f_hat = read_signal(tmp.file("fhat.csv"), "i,f_hat", n);
    CHECK((f_hat - rep.y).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("constant input stays constant") {
    write_signal(tmp.file("obs.csv"), "i,y", Eigen::VectorXd::Constant(n, 2.5));
    for (const char* est : {"pinsker", "projection"}) {
      const auto r = run_cli({"denoise", "--graph", "path:64", "--obs", tmp.file("obs.csv"), "--estimator", est,
                              "--out", tmp.file("fhat.csv")});
      CHECK(r.code == 0);
      const Eigen::VectorXd f_hat = read_signal(tmp.file("fhat.csv"), "i,f_hat", n);
      CHECK((f_hat.array() - f_hat(0)).abs().maxCoeff() < 1e-9);
      if (std::string(est) == "projection") CHECK(std::abs(f_hat(0) - 2.5) < 1e-9);
      else CHECK(std::abs(f_hat(0) - 2.5 * plan.l(0)) < 1e-9);
    }
  }

  SUBCASE("risk matches the harness replicate") {
    const RegressionReplicate rep = simulate_regression_replicate(s, w, plan.l, 1.0, 1.0, derive_seed(1, n, 0));
    write_signal(tmp.file("obs.csv"), "i,y", rep.y);
    write_signal(tmp.file("truth.csv"), "i,f", rep.f);
    const auto r = run_cli({"denoise", "--graph", "path:64", "--obs", tmp.file("obs.csv"), "--truth",
                            tmp.file("truth.csv"), "--out", tmp.file("fhat.csv")});
    CHECK(r.code == 0);
    CHECK(r.out.find("N=" + std::to_string(plan.N) + "\n") != std::string::npos);
    const auto pos = r.out.find("risk=");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(r.out.substr(pos + 5)) == doctest::Approx(rep.risk).epsilon(1e-9));
  }

  SUBCASE("missing vertices") {
    std::ofstream(tmp.file("short.csv")) << "i,y\n0,1\n1,2\n";
    CHECK(run_cli({"denoise", "--graph", "path:64", "--obs", tmp.file("short.csv"), "--out",
                   tmp.file("fhat.csv")})
              .code == cli::kExitValidation);
    std::ofstream(tmp.file("bad.csv")) << "i,value\n0,1\n";
    CHECK(run_cli({"denoise", "--graph", "path:64", "--obs", tmp.file("bad.csv"), "--out",
                   tmp.file("fhat.csv")})
              .code == cli::kExitValidation);
    CHECK(run_cli({"denoise", "--graph", "path:64", "--obs", tmp.file("none.csv"), "--out",
                   tmp.file("fhat.csv")})
              .code == cli::kExitIo);
  }
}

TEST_CASE("classify") {
  TempDir tmp;
  const std::size_t n = 64;
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = i < n / 2 ? 1.0 : 0.0;
  write_signal(tmp.file("obs.csv"), "i,y", y);
  for (const char* mode : {"direct", "link"}) {
    const auto r = run_cli({"classify", "--graph", "path:64", "--obs", tmp.file("obs.csv"), "--mode", mode,
                            "--out", tmp.file("rho.csv")});
    CHECK(r.code == 0);
    const Eigen::VectorXd rho = read_signal(tmp.file("rho.csv"), "i,rho_hat", n);
    CHECK(rho.minCoeff() >= kProbabilityClip);
    CHECK(rho.maxCoeff() <= 1.0 - kProbabilityClip);
    CHECK(rho(0) > 0.5);
    CHECK(rho(n - 1) < 0.5);
  }
  y(3) = 0.5;
  write_signal(tmp.file("obs.csv"), "i,y", y);
  CHECK(run_cli({"classify", "--graph", "path:64", "--obs", tmp.file("obs.csv"), "--out", tmp.file("rho.csv")})
            .code == cli::kExitValidation);
  CHECK(run_cli({"classify", "--graph", "path:64", "--obs", tmp.file("obs.csv"), "--mode", "other", "--out",
                 tmp.file("rho.csv")})
            .code == cli::kExitValidation);
}

TEST_CASE("simulate") {
  TempDir tmp;
  const std::vector<std::string> base{"simulate", "--family", "path", "--n-list", "64,128,256", "--reps", "5",
                                      "--seed", "3"};
  auto a_args = base;
  a_args.insert(a_args.end(), {"--out-prefix", tmp.file("a")});
  auto b_args = base;
  b_args.insert(b_args.end(), {"--out-prefix", tmp.file("b"), "--threads", "3"});
  const auto a = run_cli(a_args);
  const auto b = run_cli(b_args);
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("theory_slope=-0.666666666667") != std::string::npos);
  CHECK(slurp(tmp.file("a_results.csv")) == slurp(tmp.file("b_results.csv")));
  CHECK(slurp(tmp.file("a_aggregate.csv")) == slurp(tmp.file("b_aggregate.csv")));

  // Same configuration through the library.
  ExperimentSpec spec;
  spec.n_values = {64, 128, 256};
  spec.reps = 5;
  spec.seed = 3;
  std::ostringstream lib;
  write_results_csv(lib, run_experiment(spec));
  CHECK(slurp(tmp.file("a_results.csv")) == lib.str());

  const auto zero = run_cli({"simulate", "--family", "path", "--n-list", "64,128", "--reps", "2", "--sigma", "0",
                             "--out-prefix", tmp.file("z")});
  CHECK(zero.code == 0);
  CHECK(zero.err.find("degenerate: zero risk") != std::string::npos);

  const auto clf = run_cli({"simulate", "--family", "path", "--n-list", "64,128", "--reps", "2", "--beta", "0.4",
                            "--estimator", "classification-direct", "--out-prefix", tmp.file("c")});
  CHECK(clf.code == 0);
  CHECK(clf.err.find("warning:") != std::string::npos);

  CHECK(run_cli({"simulate", "--family", "grid:2", "--n-list", "30,64", "--reps", "2", "--out-prefix",
                 tmp.file("g")})
            .code == cli::kExitValidation);
  CHECK(run_cli({"simulate", "--family", "path", "--n-list", "64,128", "--estimator", "kernel", "--out-prefix",
                 tmp.file("k")})
            .code == cli::kExitValidation);
}

TEST_CASE("fano") {
  TempDir tmp;
  const auto small = run_cli({"fano", "--graph", "path:16", "--out", tmp.file("f.csv")});
  CHECK(small.code == cli::kExitValidation);
  CHECK(small.err.find("n too small for packing") != std::string::npos);

  const auto a = run_cli({"fano", "--graph", "path:1024", "--seed", "4", "--out", tmp.file("a.csv")});
  const auto b = run_cli({"fano", "--graph", "path:1024", "--seed", "4", "--out", tmp.file("b.csv")});
  CHECK(a.code == 0);
  CHECK(a.out.rfind("valid=true\nN=11\n", 0) == 0);
  CHECK(slurp(tmp.file("a.csv")) == slurp(tmp.file("b.csv")));

  const auto reg = run_cli({"fano", "--graph", "path:1024", "--mode", "reg", "--sigma", "2", "--out", tmp.file("r.csv")});
  CHECK(reg.code == 0);
  CHECK(reg.out.rfind("valid=true", 0) == 0);
}

TEST_CASE("prior-demo") {
  const auto a = run_cli({"prior-demo", "--graph", "path:256", "--draws", "500", "--seed", "2"});
  const auto b = run_cli({"prior-demo", "--graph", "path:256", "--draws", "500", "--seed", "2"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("within_band=true") != std::string::npos);

  const auto tiny = run_cli({"prior-demo", "--graph", "path:256", "--delta", "0.99", "--draws", "500"});
  CHECK(tiny.code == 0);
  const auto S = std::stod(tiny.out.substr(tiny.out.find("S=") + 2));
  const auto bayes = std::stod(tiny.out.substr(tiny.out.find("bayes_risk=") + 11));
  const auto form = std::stod(tiny.out.substr(tiny.out.find("mean_ellipsoid_form=") + 20));
  CHECK(form < 0.02);
  CHECK(bayes < S);
  CHECK(run_cli({"prior-demo", "--graph", "path:256", "--delta", "1.5"}).code == cli::kExitValidation);
}
