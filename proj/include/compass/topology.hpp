#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace compass {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

/// An oriented edge tail -> head. Edge differences are measured head minus tail.
struct Edge {
  VertexId tail;
  VertexId head;

  friend bool operator==(const Edge&, const Edge&) = default;
};

enum class GraphKind : std::uint8_t { path = 0, ring = 1, torus = 2, custom = 3 };

std::string to_string(GraphKind kind);

/// Finite, connected, simple graph with stable edge ids 0..edge_count()-1.
///
/// Vertices are 0-based internally. For paths and rings the vertex labelled
/// v in the usual 1..n numbering is internal vertex v-1, and the edge
/// e_v = <v, v+1> is edge id v-1 oriented v -> v+1; the ring's closing edge
/// e_n = <n, 1> is id n-1.
class Graph {
 public:
  /// Validates the edge list: endpoints in range, no self-loops, no repeated
  /// unordered pairs, connected. Throws std::invalid_argument otherwise.
  Graph(std::size_t vertex_count, std::vector<Edge> edges, GraphKind kind = GraphKind::custom,
        std::vector<std::size_t> dims = {});

  std::size_t vertex_count() const noexcept { return vertex_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(EdgeId id) const { return edges_.at(id); }
  GraphKind kind() const noexcept { return kind_; }
  /// Side lengths for tori, {n} for paths and rings, empty for custom graphs.
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }

  /// Ids of the edges incident to `v`, ascending.
  std::span<const EdgeId> incident(VertexId v) const;
  std::size_t degree(VertexId v) const { return incident(v).size(); }
  std::size_t max_degree() const noexcept { return max_degree_; }

  /// True when every vertex has exactly one outgoing and one incoming edge,
  /// i.e. the graph is a single consistently oriented cycle.
  bool is_oriented_cycle() const noexcept;

 private:
  std::size_t vertex_count_;
  std::vector<Edge> edges_;
  GraphKind kind_;
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::vector<EdgeId> incidence_;
  std::size_t max_degree_ = 0;
};

Graph build_path(std::size_t n);
Graph build_ring(std::size_t n);
/// Nearest-neighbour torus; each side length must be at least 3.
Graph build_torus(const std::vector<std::size_t>& dims);

/// Edges outside `subset` that share a vertex with an edge of `subset`,
/// ascending.
std::vector<EdgeId> edge_boundary(const Graph& g, std::span<const EdgeId> subset);

/// Reads one 1-based "u v" pair per line. Blank lines and lines starting
/// with '#' are skipped. The vertex count is the largest label seen.
Graph read_edge_list(std::istream& in);
Graph load_edge_list(const std::string& path);

}  // namespace compass
