#ifndef SWARM_SPATIAL_GRID_HPP
#define SWARM_SPATIAL_GRID_HPP

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

namespace swarm {

using Point = Eigen::Vector2d;

/**
 * Uniform bucket grid over an axis-aligned rectangle.
 *
 * Items are stored by index into the span passed to rebuild(); queries
 * return those indices. Points outside the rectangle are clamped into the
 * border cells, so results stay exact for any input.
 */
class SpatialGrid {
 public:
  SpatialGrid() = default;
  SpatialGrid(double width, double height, double cell_size);

  void rebuild(std::span<const Point> points);

  /// Appends to `out` the indices i with |points[i] - center| <= radius, in
  /// increasing index order.
  void query(const Point& center, double radius, std::vector<std::size_t>& out) const;

  std::vector<std::size_t> query(const Point& center, double radius) const {
    std::vector<std::size_t> out;
    query(center, radius, out);
    return out;
  }

  /// True if any indexed point lies within `radius` of `center`.
  bool any_within(const Point& center, double radius) const;

  double cell_size() const { return cell_; }
  std::size_t size() const { return points_.size(); }

 private:
  int cell_x(double x) const;
  int cell_y(double y) const;

  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<Point> points_;
  std::vector<std::size_t> cell_start_;  // CSR offsets, size nx*ny + 1
  std::vector<std::size_t> entries_;
};

}  // namespace swarm

#endif  // SWARM_SPATIAL_GRID_HPP
