#pragma once

/// \file mesh.hpp
/// Uniform Cartesian background meshes, uniform refinement and interior
/// facet (skeleton) topology.
///
/// Cells are numbered lexicographically with x fastest: cell (i, j) has id
/// `j * nx + i`. Vertices likewise: vertex (i, j) has id `j * (nx + 1) + i`.
/// Every iteration order in the library derives from these numberings.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace feinn {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

struct BoundingBox {
  Point lo;
  Point hi;

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  double area() const { return width() * height(); }
};

/// An interior facet shared by two cells. `normal_axis` is 0 for a vertical
/// facet (normal +x) and 1 for a horizontal facet (normal +y); the normal
/// always points from `minus` (lower id) to `plus` (higher id).
struct Facet {
  int minus = -1;
  int plus = -1;
  int normal_axis = 0;

  Point normal() const { return normal_axis == 0 ? Point{1.0, 0.0} : Point{0.0, 1.0}; }
  friend bool operator==(const Facet&, const Facet&) = default;
};

class BackgroundMesh {
 public:
  BackgroundMesh() = default;

  BackgroundMesh(BoundingBox box, int nx, int ny) : box_(box), nx_(nx), ny_(ny) {
    if (nx < 1 || ny < 1) {
      throw std::invalid_argument("BackgroundMesh: cell counts must be positive, got " +
                                  std::to_string(nx) + "x" + std::to_string(ny));
    }
    if (!(box.hi.x > box.lo.x) || !(box.hi.y > box.lo.y)) {
      throw std::invalid_argument("BackgroundMesh: degenerate bounding box");
    }
    hx_ = box.width() / nx;
    hy_ = box.height() / ny;
  }

  const BoundingBox& box() const { return box_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int num_cells() const { return nx_ * ny_; }
  int num_vertices() const { return (nx_ + 1) * (ny_ + 1); }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  /// Characteristic mesh size: the largest axis spacing.
  double h() const { return std::max(hx_, hy_); }
  double cell_area() const { return hx_ * hy_; }

  int cell_id(int i, int j) const { return j * nx_ + i; }
  std::array<int, 2> cell_ij(int id) const { return {id % nx_, id / nx_}; }

  Point vertex(int i, int j) const {
    // Exact lattice positions: refining by a then b equals refining by a*b.
    return {box_.lo.x + box_.width() * (static_cast<double>(i) / nx_),
            box_.lo.y + box_.height() * (static_cast<double>(j) / ny_)};
  }
  Point vertex(int id) const { return vertex(id % (nx_ + 1), id / (nx_ + 1)); }

  /// Vertex ids of a cell in counter-clockwise order starting at the lower-left corner.
  std::array<int, 4> cell_vertices(int id) const {
    auto [i, j] = cell_ij(id);
    int v0 = j * (nx_ + 1) + i;
    return {v0, v0 + 1, v0 + nx_ + 2, v0 + nx_ + 1};
  }

  Point cell_lo(int id) const {
    auto [i, j] = cell_ij(id);
    return vertex(i, j);
  }
  Point cell_hi(int id) const {
    auto [i, j] = cell_ij(id);
    return vertex(i + 1, j + 1);
  }

  /// Cell containing `p`; points on shared edges go to the upper/right cell,
  /// except on the box's upper/right boundary. Returns -1 outside the box.
  int locate(Point p) const {
    double tx = (p.x - box_.lo.x) / hx_;
    double ty = (p.y - box_.lo.y) / hy_;
    if (tx < -1e-12 || ty < -1e-12 || tx > nx_ + 1e-12 || ty > ny_ + 1e-12) return -1;
    int i = std::clamp(static_cast<int>(std::floor(tx)), 0, nx_ - 1);
    int j = std::clamp(static_cast<int>(std::floor(ty)), 0, ny_ - 1);
    return cell_id(i, j);
  }

  /// All interior facets, vertical ones first, each in lexicographic order.
  std::vector<Facet> interior_facets() const {
    std::vector<Facet> out;
    out.reserve(static_cast<std::size_t>((nx_ - 1) * ny_ + nx_ * (ny_ - 1)));
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i + 1 < nx_; ++i) out.push_back({cell_id(i, j), cell_id(i + 1, j), 0});
    for (int j = 0; j + 1 < ny_; ++j)
      for (int i = 0; i < nx_; ++i) out.push_back({cell_id(i, j), cell_id(i, j + 1), 1});
    return out;
  }

  /// Face-neighbours of a cell (at most four), in the order -x, +x, -y, +y.
  std::vector<int> neighbors(int id) const {
    auto [i, j] = cell_ij(id);
    std::vector<int> out;
    if (i > 0) out.push_back(id - 1);
    if (i + 1 < nx_) out.push_back(id + 1);
    if (j > 0) out.push_back(id - nx_);
    if (j + 1 < ny_) out.push_back(id + nx_);
    return out;
  }

 private:
  BoundingBox box_{};
  int nx_ = 0;
  int ny_ = 0;
  double hx_ = 0.0;
  double hy_ = 0.0;
};

inline BackgroundMesh build_mesh(BoundingBox box, int nx, int ny) { return BackgroundMesh(box, nx, ny); }

/// A mesh obtained by subdividing every cell of `coarse` into factor x factor children.
struct RefinedMesh {
  BackgroundMesh coarse;
  BackgroundMesh fine;
  int factor = 1;

  int parent(int child) const {
    auto [i, j] = fine.cell_ij(child);
    return coarse.cell_id(i / factor, j / factor);
  }
};

inline RefinedMesh refine_uniform(const BackgroundMesh& mesh, int factor) {
  if (factor < 1) throw std::invalid_argument("refine_uniform: factor must be >= 1, got " + std::to_string(factor));
  return {mesh, BackgroundMesh(mesh.box(), mesh.nx() * factor, mesh.ny() * factor), factor};
}

/// Interior facets with at least one adjacent cell in `cut_cells`, each once,
/// oriented from the lower to the higher cell id.
inline std::vector<Facet> skeleton_faces_near_boundary(const BackgroundMesh& mesh, const std::vector<int>& cut_cells) {
  std::vector<Facet> out;
  if (cut_cells.empty()) return out;
  std::vector<char> is_cut(static_cast<std::size_t>(mesh.num_cells()), 0);
  for (int c : cut_cells) {
    if (c < 0 || c >= mesh.num_cells()) throw std::out_of_range("skeleton_faces_near_boundary: bad cell id");
    is_cut[static_cast<std::size_t>(c)] = 1;
  }
  for (const Facet& f : mesh.interior_facets()) {
    if (is_cut[static_cast<std::size_t>(f.minus)] || is_cut[static_cast<std::size_t>(f.plus)]) out.push_back(f);
  }
  return out;
}

}  // namespace feinn
