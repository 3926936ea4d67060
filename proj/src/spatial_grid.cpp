#include "swarm/spatial_grid.hpp"

#include <algorithm>
#include <cmath>

#include "swarm/errors.hpp"

namespace swarm {

SpatialGrid::SpatialGrid(double width, double height, double cell_size) : cell_(cell_size) {
  if (!(width > 0) || !(height > 0)) throw InvalidInput("SpatialGrid: empty domain");
  if (!(cell_size > 0)) throw InvalidInput("SpatialGrid: cell size must be > 0");
  nx_ = std::max(1, static_cast<int>(std::ceil(width / cell_size)));
  ny_ = std::max(1, static_cast<int>(std::ceil(height / cell_size)));
  cell_start_.assign(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
}

int SpatialGrid::cell_x(double x) const {
  return std::clamp(static_cast<int>(std::floor(x / cell_)), 0, nx_ - 1);
}

int SpatialGrid::cell_y(double y) const {
  return std::clamp(static_cast<int>(std::floor(y / cell_)), 0, ny_ - 1);
}

void SpatialGrid::rebuild(std::span<const Point> points) {
  points_.assign(points.begin(), points.end());
  const std::size_t cells = static_cast<std::size_t>(nx_) * ny_;
  std::vector<std::size_t> counts(cells + 1, 0);
  std::vector<std::size_t> cell_of(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    cell_of[i] = static_cast<std::size_t>(cell_y(points_[i].y())) * nx_ + cell_x(points_[i].x());
    ++counts[cell_of[i] + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) counts[c + 1] += counts[c];
  cell_start_ = counts;
  entries_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) entries_[counts[cell_of[i]]++] = i;
}

void SpatialGrid::query(const Point& center, double radius, std::vector<std::size_t>& out) const {
  if (points_.empty() || radius < 0) return;
  const std::size_t first = out.size();
  const double r2 = radius * radius;
  const int x0 = cell_x(center.x() - radius);
  const int x1 = cell_x(center.x() + radius);
  const int y0 = cell_y(center.y() - radius);
  const int y1 = cell_y(center.y() + radius);
  for (int cy = y0; cy <= y1; ++cy) {
    for (int cx = x0; cx <= x1; ++cx) {
      const std::size_t c = static_cast<std::size_t>(cy) * nx_ + cx;
      for (std::size_t k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
        const std::size_t i = entries_[k];
        if ((points_[i] - center).squaredNorm() <= r2) out.push_back(i);
      }
    }
  }
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
}

bool SpatialGrid::any_within(const Point& center, double radius) const {
  if (points_.empty() || radius < 0) return false;
  const double r2 = radius * radius;
  const int x0 = cell_x(center.x() - radius);
  const int x1 = cell_x(center.x() + radius);
  const int y0 = cell_y(center.y() - radius);
  const int y1 = cell_y(center.y() + radius);
  for (int cy = y0; cy <= y1; ++cy) {
    for (int cx = x0; cx <= x1; ++cx) {
      const std::size_t c = static_cast<std::size_t>(cy) * nx_ + cx;
      for (std::size_t k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
        if ((points_[entries_[k]] - center).squaredNorm() <= r2) return true;
      }
    }
  }
  return false;
}

}  // namespace swarm
