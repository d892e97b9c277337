#pragma once

#include <algorithm>
#include <span>
#include <unordered_map>
#include <vector>

#include "mesh.hpp"

namespace oseen {

/// Red refinement of every triangle: children of triangle t are 4t..4t+3,
/// corner children first, the middle child last. Regions are inherited and
/// green pairs are dissolved.
inline Mesh uniform_quad_refine(const Mesh &mesh) {
  std::vector<Point> vertices = mesh.vertices();
  const int nv = mesh.num_vertices();
  for (int e = 0; e < mesh.num_edges(); ++e)
    vertices.push_back(mesh.edge_midpoint(e));

  std::vector<Triangle> triangles;
  std::vector<int> region;
  triangles.reserve(4 * mesh.num_triangles());
  region.reserve(4 * mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Triangle &v = mesh.triangles()[t];
    const auto &te = mesh.tri_edges()[t];
    // mid[i] is the midpoint of the edge opposite vertex i.
    const int m0 = nv + te[0].edge, m1 = nv + te[1].edge, m2 = nv + te[2].edge;
    triangles.push_back({v[0], m2, m1});
    triangles.push_back({m2, v[1], m0});
    triangles.push_back({m1, m0, v[2]});
    triangles.push_back({m0, m1, m2});
    region.insert(region.end(), 4, mesh.region()[t]);
  }
  return build_mesh(std::move(vertices), std::move(triangles), std::move(region));
}

namespace detail {

class RedGreenRefiner {
public:
  explicit RedGreenRefiner(const Mesh &mesh) : vertices_(mesh.vertices()) {
    tris_.reserve(2 * mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t)
      tris_.push_back({mesh.triangles()[t], mesh.region()[t], mesh.green_pair_of(t), false, true});
    for (const GreenPair &gp : mesh.green_pairs())
      pairs_.push_back({gp.tris, gp.parent, true});
  }

  void mark(int t) {
    WorkTri &w = tris_[t];
    if (!w.alive)
      return;
    if (w.green >= 0)
      ungreen(w.green);
    else
      w.red = true;
  }

  Mesh finish() {
    close();
    return assemble();
  }

private:
  struct WorkTri {
    Triangle v;
    int region;
    int green; // pair index, or -1
    bool red;
    bool alive;
  };
  struct WorkPair {
    std::array<int, 2> tris;
    Triangle parent;
    bool alive;
  };

  std::vector<Point> vertices_;
  std::vector<WorkTri> tris_;
  std::vector<WorkPair> pairs_;
  std::unordered_map<std::uint64_t, int> mids_;

  int split_count(const Triangle &v) const {
    int n = 0;
    for (int i = 0; i < 3; ++i)
      n += mids_.count(edge_key(v[(i + 1) % 3], v[(i + 2) % 3])) ? 1 : 0;
    return n;
  }

  int midpoint(int a, int b) {
    const auto [it, inserted] = mids_.try_emplace(edge_key(a, b), static_cast<int>(vertices_.size()));
    if (inserted)
      vertices_.push_back(0.5 * (vertices_[a] + vertices_[b]));
    return it->second;
  }

  // Replaces a green pair by its parent, scheduled for red refinement. The
  // parent's bisected edge keeps its existing midpoint.
  void ungreen(int p) {
    WorkPair &pair = pairs_[p];
    if (!pair.alive)
      return;
    pair.alive = false;
    const int region = tris_[pair.tris[0]].region;
    for (int t : pair.tris)
      tris_[t].alive = false;
    const Triangle &par = pair.parent;
    // The shared vertex of both children other than parent[0] is the midpoint.
    int mid = -1;
    for (int a : tris_[pair.tris[0]].v)
      for (int b : tris_[pair.tris[1]].v)
        if (a == b && a != par[0])
          mid = a;
    mids_[edge_key(par[1], par[2])] = mid;
    tris_.push_back({par, region, -1, true, true});
  }

  void red_refine(int t) {
    const Triangle v = tris_[t].v;
    const int region = tris_[t].region;
    tris_[t].alive = false;
    const int m0 = midpoint(v[1], v[2]);
    const int m1 = midpoint(v[2], v[0]);
    const int m2 = midpoint(v[0], v[1]);
    tris_.push_back({{v[0], m2, m1}, region, -1, false, true});
    tris_.push_back({{m2, v[1], m0}, region, -1, false, true});
    tris_.push_back({{m1, m0, v[2]}, region, -1, false, true});
    tris_.push_back({{m0, m1, m2}, region, -1, false, true});
  }

  void close() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t t = 0; t < tris_.size(); ++t) {
        if (!tris_[t].alive)
          continue;
        const int n = split_count(tris_[t].v);
        const int green = tris_[t].green;
        if (tris_[t].red || n >= 2) {
          if (green >= 0)
            ungreen(green);
          else
            red_refine(static_cast<int>(t));
          changed = true;
        } else if (n == 1 && green >= 0) {
          // Green triangles are never bisected again.
          ungreen(green);
          changed = true;
        }
      }
    }
  }

  Mesh assemble() {
    std::vector<Triangle> out;
    std::vector<int> region;
    std::vector<GreenPair> greens;
    std::vector<int> index(tris_.size(), -1);
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      const WorkTri &w = tris_[t];
      if (!w.alive)
        continue;
      if (split_count(w.v) == 1) {
        int l = 0;
        while (!mids_.count(edge_key(w.v[(l + 1) % 3], w.v[(l + 2) % 3])))
          ++l;
        const int a = w.v[l], p = w.v[(l + 1) % 3], q = w.v[(l + 2) % 3];
        const int m = mids_.at(edge_key(p, q));
        const int first = static_cast<int>(out.size());
        out.push_back({a, p, m});
        out.push_back({a, m, q});
        region.insert(region.end(), 2, w.region);
        greens.push_back({{first, first + 1}, {a, p, q}});
        continue;
      }
      index[t] = static_cast<int>(out.size());
      out.push_back(w.v);
      region.push_back(w.region);
    }
    for (const WorkPair &p : pairs_)
      if (p.alive)
        greens.push_back({{index[p.tris[0]], index[p.tris[1]]}, p.parent});
    return build_mesh(std::move(vertices_), std::move(out), std::move(region), std::move(greens));
  }
};

} // namespace detail

/// Red-green refinement: marked triangles are quadrisected and the resulting
/// hanging nodes are removed by bisecting neighbours. A green pair touched by
/// new refinement is first replaced by its parent, which is then red-refined,
/// so green triangles are never refined themselves.
inline Mesh refine_marked(const Mesh &mesh, std::span<const int> marked) {
  detail::RedGreenRefiner refiner(mesh);
  for (int t : marked) {
    if (t < 0 || t >= mesh.num_triangles())
      throw MeshError("marked triangle index out of range");
    refiner.mark(t);
  }
  return refiner.finish();
}

} // namespace oseen
