#include "grate/graph.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "grate/error.hpp"

namespace grate {
namespace {

// Returns an unreachable vertex from 0, or n when the graph is connected.
std::size_t first_unreachable(std::size_t n, const std::vector<std::vector<Vertex>>& adj) {
  std::vector<char> seen(n, 0);
  std::queue<Vertex> frontier;
  seen[0] = 1;
  frontier.push(0);
  while (!frontier.empty()) {
    Vertex u = frontier.front();
    frontier.pop();
    for (Vertex v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        frontier.push(v);
      }
    }
  }
  auto it = std::find(seen.begin(), seen.end(), 0);
  return static_cast<std::size_t>(it - seen.begin());
}

std::size_t checked_product(std::span<const std::size_t> dims, std::size_t min_dim,
                            const char* what) {
  if (dims.empty()) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + ": dims must be non-empty");
  }
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d < min_dim) {
      throw Error(ErrorKind::InvalidArgument, std::string(what) + ": every dim must be >= " +
                                                  std::to_string(min_dim) + ", got " +
                                                  std::to_string(d));
    }
    if (n > std::numeric_limits<std::size_t>::max() / d) {
      throw Error(ErrorKind::InvalidArgument, std::string(what) + ": vertex count overflows");
    }
    n *= d;
  }
  return n;
}

Graph build_product(std::span<const std::size_t> dims, bool wrap) {
  const std::size_t n = checked_product(dims, wrap ? 3 : 2, wrap ? "torus" : "grid");
  const std::size_t d = dims.size();
  // Row-major strides: the last coordinate varies fastest.
  std::vector<std::size_t> stride(d, 1);
  for (std::size_t k = d - 1; k > 0; --k) stride[k - 1] = stride[k] * dims[k];

  std::vector<Edge> edges;
  std::vector<std::size_t> coord(d, 0);
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t rest = v;
    for (std::size_t k = 0; k < d; ++k) {
      coord[k] = rest / stride[k];
      rest %= stride[k];
    }
    for (std::size_t k = 0; k < d; ++k) {
      if (coord[k] + 1 < dims[k]) {
        edges.emplace_back(v, v + stride[k]);
      } else if (wrap) {
        Vertex w = v - coord[k] * stride[k];
        edges.emplace_back(std::min(v, w), std::max(v, w));
      }
    }
  }
  return Graph(n, std::move(edges));
}

}  // namespace

Graph::Graph(std::size_t n, std::vector<Edge> edges) : n_(n), adjacency_(n) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "graph must have at least one vertex");
  for (auto& [u, v] : edges) {
    if (u == v) {
      throw Error(ErrorKind::Validation, "self-loop at vertex " + std::to_string(u));
    }
    if (u >= n || v >= n) {
      throw Error(ErrorKind::Validation, "edge {" + std::to_string(u) + "," + std::to_string(v) +
                                             "} out of range for n=" + std::to_string(n));
    }
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end()) {
    throw Error(ErrorKind::Validation, "duplicate edge {" + std::to_string(dup->first) + "," +
                                           std::to_string(dup->second) + "}");
  }
  for (const auto& [u, v] : edges) {
    adjacency_[u].push_back(v);
    adjacency_[v].push_back(u);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
  edges_ = std::move(edges);

  if (std::size_t lost = first_unreachable(n_, adjacency_); lost < n_) {
    throw Error(ErrorKind::Validation, "graph is disconnected: vertices 0 and " +
                                           std::to_string(lost) + " are not connected");
  }
}

std::vector<std::size_t> Graph::degrees() const {
  std::vector<std::size_t> out(n_);
  for (std::size_t v = 0; v < n_; ++v) out[v] = adjacency_[v].size();
  return out;
}

bool Graph::has_edge(Vertex u, Vertex v) const {
  if (u >= n_ || v >= n_) return false;
  const auto& nb = adjacency_[u];
  return std::binary_search(nb.begin(), nb.end(), v);
}

Graph build_path(std::size_t n) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "path: n must be >= 2");
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph(n, std::move(edges));
}

Graph build_grid(std::span<const std::size_t> dims) { return build_product(dims, false); }

Graph build_torus(std::span<const std::size_t> dims) { return build_product(dims, true); }

SmallWorld build_small_world(std::size_t n, std::size_t k, double p, std::uint64_t seed) {
  if (k == 0 || k % 2 != 0) {
    throw Error(ErrorKind::InvalidArgument, "small-world: k must be a positive even integer");
  }
  if (k >= n) throw Error(ErrorKind::InvalidArgument, "small-world: k must be < n");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "small-world: p must lie in [0,1]");
  }

  for (int attempt = 0; attempt < kSmallWorldRetries; ++attempt) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    std::vector<std::set<Vertex>> adj(n);
    for (std::size_t j = 1; j <= k / 2; ++j) {
      for (std::size_t u = 0; u < n; ++u) {
        Vertex v = (u + j) % n;
        adj[u].insert(v);
        adj[v].insert(u);
      }
    }
    for (std::size_t j = 1; j <= k / 2; ++j) {
      for (std::size_t u = 0; u < n; ++u) {
        if (coin(rng) >= p) continue;
        Vertex v = (u + j) % n;
        if (!adj[u].count(v) || adj[u].size() >= n - 1) continue;
        Vertex w = pick(rng);
        while (w == u || adj[u].count(w)) w = pick(rng);
        adj[u].erase(v);
        adj[v].erase(u);
        adj[u].insert(w);
        adj[w].insert(u);
      }
    }

    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u) {
      for (Vertex v : adj[u]) {
        if (u < v) edges.emplace_back(u, v);
      }
    }
    try {
      return SmallWorld{Graph(n, std::move(edges)), s};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Validation) throw;
    }
  }
  throw Error(ErrorKind::Validation, "small-world: no connected graph after " +
                                         std::to_string(kSmallWorldRetries) + " seeds");
}

Graph load_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::size_t max_id = 0;
  bool any = false;
  std::string line;
  std::size_t line_no = 0;
  auto parse_id = [&](const std::string& tok) -> Vertex {
    const bool digits = !tok.empty() && std::all_of(tok.begin(), tok.end(), [](unsigned char c) {
      return c >= '0' && c <= '9';
    });
    if (!digits) {
      throw Error(ErrorKind::Parse,
                  "line " + std::to_string(line_no) + ": expected vertex id, got '" + tok + "'");
    }
    try {
      return static_cast<Vertex>(std::stoull(tok));
    } catch (const std::out_of_range&) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": vertex id too large");
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string a, b, extra;
    if (!(fields >> a) || a.front() == '#') continue;
    if (!(fields >> b) || (fields >> extra)) {
      throw Error(ErrorKind::Parse,
                  "line " + std::to_string(line_no) + ": expected exactly two vertex ids");
    }
    Vertex u = parse_id(a);
    Vertex v = parse_id(b);
    if (u == v) {
      throw Error(ErrorKind::Parse,
                  "line " + std::to_string(line_no) + ": self-loop at vertex " + std::to_string(u));
    }
    edges.emplace_back(std::min(u, v), std::max(u, v));
    max_id = std::max({max_id, u, v});
    any = true;
  }
  if (in.bad()) throw Error(ErrorKind::Io, "failed reading edge list");
  if (!any) throw Error(ErrorKind::Validation, "edge list contains no edges");

  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return Graph(max_id + 1, std::move(edges));
}

Eigen::MatrixXd laplacian(const Graph& g, std::size_t dense_cap) {
  const std::size_t n = g.size();
  if (n > dense_cap) {
    throw Error(ErrorKind::InvalidArgument, "dense Laplacian requested for n=" +
                                                std::to_string(n) + " above cap " +
                                                std::to_string(dense_cap));
  }
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [u, v] : g.edges()) {
    const auto i = static_cast<Eigen::Index>(u);
    const auto j = static_cast<Eigen::Index>(v);
    L(i, i) += 1.0;
    L(j, j) += 1.0;
    L(i, j) = -1.0;
    L(j, i) = -1.0;
  }
  return L;
}

Eigen::VectorXd apply_laplacian(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != g.size()) {
    throw Error(ErrorKind::InvalidArgument, "apply_laplacian: length mismatch");
  }
  Eigen::VectorXd y(x.size());
  for (std::size_t u = 0; u < g.size(); ++u) {
    const auto& nb = g.neighbors(u);
    double acc = static_cast<double>(nb.size()) * x(static_cast<Eigen::Index>(u));
    for (Vertex v : nb) acc -= x(static_cast<Eigen::Index>(v));
    y(static_cast<Eigen::Index>(u)) = acc;
  }
  return y;
}

}  // namespace grate
