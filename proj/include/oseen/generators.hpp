#pragma once

#include <vector>

#include "mesh.hpp"

namespace oseen {

/// Fixed 19-triangle triangulation of the unit square. Every triangle is its
/// own region, so each region stays a uniform grid under quad-refinement and
/// all refinements are piecewise uniform. 17 vertices, 13 on the boundary,
/// smallest angle about 20 degrees.
inline Mesh make_square_piecewise_uniform() {
  std::vector<Point> v = {{0.0, 0.0},    {0.34, 0.0},   {0.735, 0.0},  {1.0, 0.0},   {1.0, 0.201}, {1.0, 0.316},
                          {1.0, 0.564},  {1.0, 1.0},    {0.661, 1.0},  {0.4, 1.0},   {0.0, 1.0},   {0.0, 0.589},
                          {0.0, 0.321},  {0.674, 0.243}, {0.324, 0.253}, {0.664, 0.556}, {0.287, 0.581}};
  std::vector<Triangle> t = {{0, 1, 14},  {0, 14, 12},  {1, 2, 13},   {1, 13, 14},  {2, 3, 4},
                             {2, 4, 13},  {4, 5, 13},   {5, 6, 15},   {5, 15, 13},  {6, 7, 8},
                             {6, 8, 15},  {8, 9, 15},   {9, 10, 16},  {9, 16, 15},  {10, 11, 16},
                             {11, 12, 16}, {12, 14, 16}, {13, 15, 14}, {14, 15, 16}};
  std::vector<int> region(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    region[i] = static_cast<int>(i);
  return build_mesh(std::move(v), std::move(t), std::move(region));
}

/// Structured grid of [x0,x1]x[y0,y1] with n x m cells, each cut by a
/// diagonal. With `criss` the diagonal direction alternates in a checkerboard.
inline Mesh make_rectangle_grid(double x0, double x1, double y0, double y1, int n, int m, bool criss = false) {
  std::vector<Point> v;
  for (int j = 0; j <= m; ++j)
    for (int i = 0; i <= n; ++i)
      v.push_back({x0 + (x1 - x0) * i / n, y0 + (y1 - y0) * j / m});
  std::vector<Triangle> t;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if (criss && (i + j) % 2 == 1) {
        t.push_back({a, b, d});
        t.push_back({b, c, d});
      } else {
        t.push_back({a, b, c});
        t.push_back({a, c, d});
      }
    }
  std::vector<int> region(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    region[i] = static_cast<int>(i);
  return build_mesh(std::move(v), std::move(t), std::move(region));
}

/// L-shaped domain [-1,1]^2 minus [0,1]x[-1,0]: three unit squares, each split
/// into 2x2 cells with diagonals through the reentrant corner (0,0).
inline Mesh make_lshape_mesh() {
  std::vector<Point> v;
  std::vector<Triangle> t;
  // grid coordinates in half units, i, j in [-2, 2]
  std::vector<int> index(25, -1);
  auto vertex = [&](int i, int j) {
    int &slot = index[(i + 2) * 5 + (j + 2)];
    if (slot < 0) {
      slot = static_cast<int>(v.size());
      v.push_back({0.5 * i, 0.5 * j});
    }
    return slot;
  };
  for (int j = -2; j < 2; ++j)
    for (int i = -2; i < 2; ++i) {
      if (i >= 0 && j < 0)
        continue;
      const int a = vertex(i, j), b = vertex(i + 1, j), c = vertex(i + 1, j + 1), d = vertex(i, j + 1);
      // Diagonals point towards the origin so (0,0) gets many neighbours.
      const bool anti = (i < 0) != (j < 0);
      if (anti) {
        t.push_back({a, b, d});
        t.push_back({b, c, d});
      } else {
        t.push_back({a, b, c});
        t.push_back({a, c, d});
      }
    }
  std::vector<int> region(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    region[i] = static_cast<int>(i);
  return build_mesh(std::move(v), std::move(t), std::move(region));
}

/// Initial grid for the boundary-layer example: 4x4 cells on the unit square.
inline Mesh make_square_grid(int n = 4) { return make_rectangle_grid(0.0, 1.0, 0.0, 1.0, n, n, false); }

} // namespace oseen
