#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "geometry.hpp"

namespace oseen {

class MeshError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;

/// Global edge index plus the orientation of the triangle's outward normal
/// relative to the edge's global normal (+1 when they coincide).
struct EdgeRef {
  int edge = -1;
  int sign = 1;
};

/// Two triangles produced by bisecting `parent` through the midpoint of the
/// edge opposite parent[0].
struct GreenPair {
  std::array<int, 2> tris{};
  Triangle parent{};
};

inline std::uint64_t edge_key(int a, int b) {
  if (a > b)
    std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

/// Conforming triangulation with oriented edge topology.
///
/// Local edge i of a triangle is the edge opposite local vertex i. Edges are
/// oriented from the lower to the higher vertex index and their global normal
/// is the clockwise rotation of the unit tangent. Immutable once built.
class Mesh {
public:
  const std::vector<Point> &vertices() const { return vertices_; }
  const std::vector<Triangle> &triangles() const { return triangles_; }
  const std::vector<Edge> &edges() const { return edges_; }
  const std::vector<std::array<EdgeRef, 3>> &tri_edges() const { return tri_edges_; }
  const std::vector<int> &boundary_edges() const { return boundary_edges_; }
  const std::vector<int> &region() const { return region_; }
  const std::vector<GreenPair> &green_pairs() const { return green_pairs_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  /// Triangles adjacent to an edge; the second entry is -1 on the boundary.
  const std::array<int, 2> &edge_triangles(int e) const { return edge_tris_[e]; }
  bool is_boundary_edge(int e) const { return edge_tris_[e][1] < 0; }
  bool is_boundary_vertex(int v) const { return boundary_vertex_[v]; }
  /// Triangles containing vertex v.
  std::span<const int> vertex_triangles(int v) const {
    return {vertex_tris_.data() + vertex_tri_ptr_[v], vertex_tris_.data() + vertex_tri_ptr_[v + 1]};
  }
  /// Index of the green pair that triangle t belongs to, or -1.
  int green_pair_of(int t) const { return green_of_[t]; }

  TriangleGeometry geometry(int t) const {
    const Triangle &tri = triangles_[t];
    return TriangleGeometry({vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]});
  }

  double area(int t) const { return geometry(t).area; }

  double total_area() const {
    double s = 0.0;
    for (int t = 0; t < num_triangles(); ++t)
      s += area(t);
    return s;
  }

  /// Edge length times the global unit normal.
  Vec2 scaled_edge_normal(int e) const { return rotate_cw(vertices_[edges_[e][1]] - vertices_[edges_[e][0]]); }
  double edge_length(int e) const { return norm(vertices_[edges_[e][1]] - vertices_[edges_[e][0]]); }
  Point edge_midpoint(int e) const { return 0.5 * (vertices_[edges_[e][0]] + vertices_[edges_[e][1]]); }

  friend Mesh build_mesh(std::vector<Point>, std::vector<Triangle>, std::vector<int>, std::vector<GreenPair>);

private:
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<EdgeRef, 3>> tri_edges_;
  std::vector<int> boundary_edges_;
  std::vector<int> region_;
  std::vector<GreenPair> green_pairs_;
  std::vector<std::array<int, 2>> edge_tris_;
  std::vector<char> boundary_vertex_;
  std::vector<int> vertex_tri_ptr_;
  std::vector<int> vertex_tris_;
  std::vector<int> green_of_;
};

/// Builds the edge topology. Clockwise triangles are reoriented; degenerate,
/// duplicate and non-manifold input is rejected with MeshError.
inline Mesh build_mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, std::vector<int> region = {},
                       std::vector<GreenPair> green_pairs = {}) {
  if (triangles.empty())
    throw MeshError("mesh has no triangles");
  if (region.empty())
    region.assign(triangles.size(), 0);
  if (region.size() != triangles.size())
    throw MeshError("region tag count does not match triangle count");
  const int nv = static_cast<int>(vertices.size());
  for (const Triangle &t : triangles)
    for (int v : t)
      if (v < 0 || v >= nv)
        throw MeshError("triangle vertex index out of range");

  double h_max = 0.0;
  for (const Triangle &t : triangles)
    for (int i = 0; i < 3; ++i)
      h_max = std::max(h_max, norm(vertices[t[(i + 1) % 3]] - vertices[t[i]]));

  for (std::size_t k = 0; k < triangles.size(); ++k) {
    Triangle &t = triangles[k];
    const double signed_area = 0.5 * cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]);
    if (std::abs(signed_area) < 1e-14 * h_max * h_max)
      throw MeshError("degenerate triangle " + std::to_string(k));
    if (signed_area < 0.0)
      std::swap(t[1], t[2]);
  }

  {
    std::vector<Triangle> sorted = triangles;
    for (Triangle &t : sorted)
      std::sort(t.begin(), t.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw MeshError("duplicate triangle");
  }

  Mesh m;
  m.vertices_ = std::move(vertices);
  m.triangles_ = std::move(triangles);
  m.region_ = std::move(region);
  const int nt = m.num_triangles();

  std::unordered_map<std::uint64_t, int> edge_index;
  edge_index.reserve(3 * triangles.size());
  m.tri_edges_.resize(nt);
  for (int t = 0; t < nt; ++t) {
    const Triangle &tri = m.triangles_[t];
    for (int i = 0; i < 3; ++i) {
      const int a = tri[(i + 1) % 3];
      const int b = tri[(i + 2) % 3];
      const auto [it, inserted] = edge_index.try_emplace(edge_key(a, b), static_cast<int>(m.edges_.size()));
      const int e = it->second;
      if (inserted) {
        m.edges_.push_back({std::min(a, b), std::max(a, b)});
        m.edge_tris_.push_back({t, -1});
      } else {
        if (m.edge_tris_[e][1] >= 0)
          throw MeshError("non-manifold edge shared by more than two triangles");
        m.edge_tris_[e][1] = t;
      }
      // Counterclockwise traversal a -> b has outward normal rotate_cw(b - a).
      m.tri_edges_[t][i] = EdgeRef{e, a < b ? 1 : -1};
    }
  }
  for (int e = 0; e < m.num_edges(); ++e) {
    const auto [t0, t1] = m.edge_tris_[e];
    if (t1 < 0)
      continue;
    int s0 = 0, s1 = 0;
    for (const EdgeRef &r : m.tri_edges_[t0])
      if (r.edge == e)
        s0 = r.sign;
    for (const EdgeRef &r : m.tri_edges_[t1])
      if (r.edge == e)
        s1 = r.sign;
    if (s0 == s1)
      throw MeshError("inconsistent orientation across an interior edge (folded mesh)");
  }

  m.boundary_vertex_.assign(m.vertices_.size(), 0);
  for (int e = 0; e < m.num_edges(); ++e)
    if (m.edge_tris_[e][1] < 0) {
      m.boundary_edges_.push_back(e);
      m.boundary_vertex_[m.edges_[e][0]] = 1;
      m.boundary_vertex_[m.edges_[e][1]] = 1;
    }

  m.vertex_tri_ptr_.assign(m.vertices_.size() + 1, 0);
  for (const Triangle &tri : m.triangles_)
    for (int v : tri)
      ++m.vertex_tri_ptr_[v + 1];
  for (std::size_t v = 0; v < m.vertices_.size(); ++v)
    m.vertex_tri_ptr_[v + 1] += m.vertex_tri_ptr_[v];
  m.vertex_tris_.resize(3 * m.triangles_.size());
  {
    std::vector<int> fill(m.vertex_tri_ptr_.begin(), m.vertex_tri_ptr_.end() - 1);
    for (int t = 0; t < nt; ++t)
      for (int v : m.triangles_[t])
        m.vertex_tris_[fill[v]++] = t;
  }

  m.green_of_.assign(nt, -1);
  for (std::size_t k = 0; k < green_pairs.size(); ++k)
    for (int t : green_pairs[k].tris) {
      if (t < 0 || t >= nt)
        throw MeshError("green pair refers to a missing triangle");
      m.green_of_[t] = static_cast<int>(k);
    }
  m.green_pairs_ = std::move(green_pairs);
  return m;
}

inline std::shared_ptr<const Mesh> share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

struct MeshStats {
  int nt = 0;
  double h_max = 0.0;
  double h_min = 0.0;
  /// Largest circumradius / inradius over all triangles (2 for equilateral).
  double max_ratio = 0.0;
};

inline MeshStats mesh_stats(const Mesh &mesh) {
  MeshStats s;
  s.nt = mesh.num_triangles();
  s.h_min = std::numeric_limits<double>::infinity();
  for (int t = 0; t < s.nt; ++t) {
    const TriangleGeometry g = mesh.geometry(t);
    const double h = g.diameter();
    s.h_max = std::max(s.h_max, h);
    s.h_min = std::min(s.h_min, h);
    s.max_ratio = std::max(s.max_ratio, g.circumradius() / g.inradius());
  }
  return s;
}

/// True when no vertex hangs on another triangle's edge. Edge sharing is
/// already enforced by build_mesh; a hanging node makes both halves and the
/// long edge topological boundary edges, so only those need checking.
inline bool is_conforming(const Mesh &mesh) {
  const auto &v = mesh.vertices();
  std::vector<int> on_boundary;
  for (int i = 0; i < mesh.num_vertices(); ++i)
    if (mesh.is_boundary_vertex(i))
      on_boundary.push_back(i);
  for (int e : mesh.boundary_edges()) {
    const Point a = v[mesh.edges()[e][0]];
    const Point b = v[mesh.edges()[e][1]];
    const double len = norm(b - a);
    for (int i : on_boundary) {
      if (i == mesh.edges()[e][0] || i == mesh.edges()[e][1])
        continue;
      const Point p = v[i];
      const double t = dot(p - a, b - a) / (len * len);
      if (t <= 1e-12 || t >= 1.0 - 1e-12)
        continue;
      if (std::abs(cross(b - a, p - a)) / len < 1e-12 * len)
        return false;
    }
  }
  return true;
}

/// Writes the ASCII mesh format: "nv nt", nv lines "x y", nt lines "i0 i1 i2 region".
inline void write_mesh(std::ostream &out, const Mesh &mesh) {
  out << mesh.num_vertices() << ' ' << mesh.num_triangles() << '\n';
  out << std::setprecision(17);
  for (const Point &p : mesh.vertices())
    out << p.x << ' ' << p.y << '\n';
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Triangle &tri = mesh.triangles()[t];
    out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << mesh.region()[t] << '\n';
  }
}

inline Mesh read_mesh(std::istream &in) {
  int nv = 0, nt = 0;
  if (!(in >> nv >> nt) || nv <= 0 || nt <= 0)
    throw MeshError("bad mesh header");
  std::vector<Point> vertices(nv);
  for (Point &p : vertices)
    if (!(in >> p.x >> p.y))
      throw MeshError("truncated vertex list");
  std::vector<Triangle> triangles(nt);
  std::vector<int> region(nt);
  for (int t = 0; t < nt; ++t)
    if (!(in >> triangles[t][0] >> triangles[t][1] >> triangles[t][2] >> region[t]))
      throw MeshError("truncated triangle list");
  return build_mesh(std::move(vertices), std::move(triangles), std::move(region));
}

inline void save_mesh(const std::string &path, const Mesh &mesh) {
  std::ofstream out(path);
  if (!out)
    throw MeshError("cannot open " + path);
  write_mesh(out, mesh);
}

inline Mesh load_mesh(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw MeshError("cannot open " + path);
  return read_mesh(in);
}

} // namespace oseen
