#include "compass/topology.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace compass {

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::path:
      return "path";
    case GraphKind::ring:
      return "ring";
    case GraphKind::torus:
      return "torus";
    case GraphKind::custom:
      return "custom";
  }
  return "unknown";
}

Graph::Graph(std::size_t vertex_count, std::vector<Edge> edges, GraphKind kind,
             std::vector<std::size_t> dims)
    : vertex_count_(vertex_count), edges_(std::move(edges)), kind_(kind), dims_(std::move(dims)) {
  if (vertex_count_ == 0) {
    throw std::invalid_argument("graph needs at least one vertex");
  }
  std::set<std::pair<VertexId, VertexId>> seen;
  std::vector<std::size_t> degree(vertex_count_, 0);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.tail >= vertex_count_ || e.head >= vertex_count_) {
      throw std::invalid_argument("edge " + std::to_string(i) + " references a missing vertex");
    }
    if (e.tail == e.head) {
      throw std::invalid_argument("edge " + std::to_string(i) + " is a self-loop");
    }
    const auto key = std::minmax(e.tail, e.head);
    if (!seen.insert({key.first, key.second}).second) {
      throw std::invalid_argument("edge " + std::to_string(i) + " duplicates an earlier edge");
    }
    ++degree[e.tail];
    ++degree[e.head];
  }

  offsets_.assign(vertex_count_ + 1, 0);
  for (std::size_t v = 0; v < vertex_count_; ++v) {
    offsets_[v + 1] = offsets_[v] + degree[v];
  }
  incidence_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    incidence_[cursor[edges_[i].tail]++] = static_cast<EdgeId>(i);
    incidence_[cursor[edges_[i].head]++] = static_cast<EdgeId>(i);
  }
  max_degree_ = vertex_count_ ? *std::max_element(degree.begin(), degree.end()) : 0;

  // Connectivity by union-find.
  std::vector<std::size_t> parent(vertex_count_);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::size_t components = vertex_count_;
  for (const Edge& e : edges_) {
    const auto a = find(e.tail);
    const auto b = find(e.head);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  if (components != 1) {
    throw std::invalid_argument("graph is not connected (" + std::to_string(components) +
                                " components)");
  }
}

std::span<const EdgeId> Graph::incident(VertexId v) const {
  if (v >= vertex_count_) {
    throw std::out_of_range("vertex " + std::to_string(v) + " out of range");
  }
  return {incidence_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

bool Graph::is_oriented_cycle() const noexcept {
  if (vertex_count_ < 3 || edges_.size() != vertex_count_) return false;
  std::vector<int> out(vertex_count_, 0);
  std::vector<int> in(vertex_count_, 0);
  for (const Edge& e : edges_) {
    ++out[e.tail];
    ++in[e.head];
  }
  for (std::size_t v = 0; v < vertex_count_; ++v) {
    if (out[v] != 1 || in[v] != 1) return false;
  }
  // Connected (checked at construction) with in = out = 1 everywhere: one cycle.
  return true;
}

Graph build_path(std::size_t n) {
  if (n < 2) {
    throw std::invalid_argument("path needs n >= 2, got " + std::to_string(n));
  }
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  for (std::size_t v = 0; v + 1 < n; ++v) {
    edges.push_back({static_cast<VertexId>(v), static_cast<VertexId>(v + 1)});
  }
  return Graph(n, std::move(edges), GraphKind::path, {n});
}

Graph build_ring(std::size_t n) {
  if (n < 3) {
    throw std::invalid_argument("ring needs n >= 3, got " + std::to_string(n));
  }
  std::vector<Edge> edges;
  edges.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    edges.push_back({static_cast<VertexId>(v), static_cast<VertexId>((v + 1) % n)});
  }
  return Graph(n, std::move(edges), GraphKind::ring, {n});
}

Graph build_torus(const std::vector<std::size_t>& dims) {
  if (dims.empty()) {
    throw std::invalid_argument("torus needs at least one dimension");
  }
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d < 3) {
      throw std::invalid_argument("torus side lengths must be >= 3, got " + std::to_string(d));
    }
    n *= d;
  }
  // Row-major coordinates; stride[k] is the index step along dimension k.
  std::vector<std::size_t> stride(dims.size(), 1);
  for (std::size_t k = dims.size() - 1; k > 0; --k) {
    stride[k - 1] = stride[k] * dims[k];
  }
  std::vector<Edge> edges;
  edges.reserve(n * dims.size());
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const std::size_t coord = (v / stride[k]) % dims[k];
      const std::size_t next = v - coord * stride[k] + ((coord + 1) % dims[k]) * stride[k];
      edges.push_back({static_cast<VertexId>(v), static_cast<VertexId>(next)});
    }
  }
  return Graph(n, std::move(edges), GraphKind::torus, dims);
}

std::vector<EdgeId> edge_boundary(const Graph& g, std::span<const EdgeId> subset) {
  std::vector<bool> inside(g.edge_count(), false);
  for (EdgeId id : subset) {
    if (id >= g.edge_count()) {
      throw std::out_of_range("edge id " + std::to_string(id) + " out of range");
    }
    inside[id] = true;
  }
  std::set<EdgeId> boundary;
  for (EdgeId id : subset) {
    const Edge& e = g.edge(id);
    for (VertexId w : {e.tail, e.head}) {
      for (EdgeId other : g.incident(w)) {
        if (!inside[other]) boundary.insert(other);
      }
    }
  }
  return {boundary.begin(), boundary.end()};
}

Graph read_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::size_t max_label = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long u = 0;
    long long v = 0;
    std::string rest;
    if (!(fields >> u >> v) || (fields >> rest)) {
      throw std::invalid_argument("edge list line " + std::to_string(line_no) +
                                  ": expected two vertex labels");
    }
    if (u < 1 || v < 1) {
      throw std::invalid_argument("edge list line " + std::to_string(line_no) +
                                  ": labels are 1-based");
    }
    max_label = std::max<std::size_t>(max_label, static_cast<std::size_t>(std::max(u, v)));
    edges.push_back({static_cast<VertexId>(u - 1), static_cast<VertexId>(v - 1)});
  }
  if (edges.empty()) {
    throw std::invalid_argument("edge list is empty");
  }
  return Graph(max_label, std::move(edges), GraphKind::custom);
}

Graph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open edge list '" + path + "'");
  }
  return read_edge_list(in);
}

}  // namespace compass
