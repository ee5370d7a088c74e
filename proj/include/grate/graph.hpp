#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace grate {

using Vertex = std::size_t;
using Edge = std::pair<Vertex, Vertex>;  // stored with first < second

/// Largest vertex count for which a dense Laplacian may be materialized.
inline constexpr std::size_t kDefaultDenseCap = 8192;

// Simple, undirected, connected graph with 0-based vertex ids. Immutable
// once constructed; the constructor rejects self-loops, duplicate edges,
// out-of-range endpoints and disconnected vertex sets.
class Graph {
 public:
  Graph(std::size_t n, std::vector<Edge> edges);

  std::size_t size() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t degree(Vertex v) const { return adjacency_.at(v).size(); }
  std::vector<std::size_t> degrees() const;
  const std::vector<Vertex>& neighbors(Vertex v) const { return adjacency_.at(v); }
  bool has_edge(Vertex u, Vertex v) const;

 private:
  std::size_t n_;
  std::vector<Edge> edges_;                  // sorted lexicographically
  std::vector<std::vector<Vertex>> adjacency_;  // sorted per vertex
};

Graph build_path(std::size_t n);

/// Cartesian product of paths; vertex (i_1,...,i_d) is flattened row-major.
Graph build_grid(std::span<const std::size_t> dims);

/// Cartesian product of cycles; every dim must be at least 3.
Graph build_torus(std::span<const std::size_t> dims);

struct SmallWorld {
  Graph graph;
  std::uint64_t seed_used;  // seed of the attempt that produced a connected graph
};

inline constexpr int kSmallWorldRetries = 64;

/// Watts-Strogatz: ring lattice with k nearest neighbours, each lattice edge
/// rewired with probability p. Disconnected draws are retried with seed+1.
SmallWorld build_small_world(std::size_t n, std::size_t k, double p, std::uint64_t seed);

/// Lines of "u v"; '#' comments and blank lines are skipped. Duplicate edges
/// are merged. Vertices are 0..max id.
Graph load_edge_list(std::istream& in);

/// Dense L = D - A. Throws InvalidArgument when n exceeds dense_cap.
Eigen::MatrixXd laplacian(const Graph& g, std::size_t dense_cap = kDefaultDenseCap);

/// L * x without materializing L.
Eigen::VectorXd apply_laplacian(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace grate
