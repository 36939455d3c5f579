#pragma once

#include <cstddef>

#include "rainsim/kernels.hpp"

namespace rainsim::kernels {

// Same semantics as _mm256_min_pd / _mm256_max_pd: the second operand wins
// when the comparison is false (including NaN).
inline double simd_min(double a, double b) { return a < b ? a : b; }
inline double simd_max(double a, double b) { return a > b ? a : b; }

// Ray origin expressed in a box's local frame, plus the slab bounds.
struct BoxFrame {
  double c, s;
  double ox, oy, oz;
  double lo_x, hi_x, lo_y, hi_y, lo_z, hi_z;
};

inline BoxFrame box_frame(double ox, double oy, double oz, const OrientedBoxes& boxes,
                          std::size_t b) {
  BoxFrame f{};
  f.c = boxes.cos_yaw[b];
  f.s = boxes.sin_yaw[b];
  const double rx = ox - boxes.cx[b];
  const double ry = oy - boxes.cy[b];
  f.ox = f.c * rx + f.s * ry;
  f.oy = f.c * ry - f.s * rx;
  f.oz = oz - boxes.cz[b];
  f.lo_x = -boxes.hx[b];
  f.hi_x = boxes.hx[b];
  f.lo_y = -boxes.hy[b];
  f.hi_y = boxes.hy[b];
  f.lo_z = -boxes.hz[b];
  f.hi_z = boxes.hz[b];
  return f;
}

void integrate_range_scalar(ClusterKinematics& k, const DynamicsStep& s, std::size_t begin,
                            std::size_t end);
void box_entry_range_scalar(double ox, double oy, double oz, RaySoA rays,
                            const OrientedBoxes& boxes, std::span<double> t_out,
                            std::span<std::int32_t> index_out, std::size_t begin,
                            std::size_t end);

}  // namespace rainsim::kernels
