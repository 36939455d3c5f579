#include <algorithm>
#include <cmath>
#include <limits>

#include "rainsim/lidar.hpp"

namespace rainsim {

namespace {
constexpr std::size_t kMaxCells = std::size_t{1} << 22;
}

ClusterGrid::ClusterGrid(std::span<const DropletCluster> clusters, double cell_size,
                         double query_radius)
    : cell_(cell_size), query_radius_(query_radius) {
  if (clusters.empty()) return;

  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi = -lo;
  for (const auto& c : clusters) {
    lo = {std::min(lo.x, c.position.x), std::min(lo.y, c.position.y),
          std::min(lo.z, c.position.z)};
    hi = {std::max(hi.x, c.position.x), std::max(hi.y, c.position.y),
          std::max(hi.z, c.position.z)};
  }
  const Vec3 pad{query_radius, query_radius, query_radius};
  lo_ = lo - pad;
  hi = hi + pad;

  auto dims = [&] {
    nx_ = std::max(1, static_cast<int>(std::ceil((hi.x - lo_.x) / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil((hi.y - lo_.y) / cell_)));
    nz_ = std::max(1, static_cast<int>(std::ceil((hi.z - lo_.z) / cell_)));
  };
  dims();
  // Far-flung clusters (large custom ranges) would blow up a dense grid.
  while (static_cast<std::size_t>(nx_) * ny_ * nz_ > kMaxCells) {
    cell_ *= 2.0;
    dims();
  }

  auto cell_span = [&](double c, double origin, int n, int& first, int& last) {
    first = std::clamp(static_cast<int>(std::floor((c - query_radius_ - origin) / cell_)), 0, n - 1);
    last = std::clamp(static_cast<int>(std::floor((c + query_radius_ - origin) / cell_)), 0, n - 1);
  };

  const std::size_t cells = static_cast<std::size_t>(nx_) * ny_ * nz_;
  std::vector<std::uint32_t> counts(cells + 1, 0);
  auto for_each_cell = [&](const DropletCluster& c, auto&& fn) {
    int x0, x1, y0, y1, z0, z1;
    cell_span(c.position.x, lo_.x, nx_, x0, x1);
    cell_span(c.position.y, lo_.y, ny_, y0, y1);
    cell_span(c.position.z, lo_.z, nz_, z0, z1);
    for (int iz = z0; iz <= z1; ++iz)
      for (int iy = y0; iy <= y1; ++iy)
        for (int ix = x0; ix <= x1; ++ix) fn(cell_index(ix, iy, iz));
  };

  for (const auto& c : clusters) {
    for_each_cell(c, [&](std::size_t idx) { ++counts[idx + 1]; });
  }
  for (std::size_t i = 1; i <= cells; ++i) counts[i] += counts[i - 1];
  cell_start_ = counts;
  ids_.resize(cell_start_.back());
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::uint32_t i = 0; i < clusters.size(); ++i) {
    for_each_cell(clusters[i], [&](std::size_t idx) { ids_[fill[idx]++] = i; });
  }
}

}  // namespace rainsim
