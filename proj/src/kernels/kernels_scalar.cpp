#include <cmath>

#include "rainsim/kernels.hpp"
#include "kernel_common.hpp"

namespace rainsim::kernels {

void ClusterKinematics::resize(std::size_t n) {
  for (auto* v : {&px, &py, &pz, &vx, &vy, &vz, &lx, &ly, &lz, &age, &pending}) v->resize(n);
}

void OrientedBoxes::push_back(double x, double y, double z, double half_x, double half_y,
                              double half_z, double yaw) {
  cx.push_back(x);
  cy.push_back(y);
  cz.push_back(z);
  hx.push_back(half_x);
  hy.push_back(half_y);
  hz.push_back(half_z);
  cos_yaw.push_back(std::cos(yaw));
  sin_yaw.push_back(std::sin(yaw));
}

void integrate_range_scalar(ClusterKinematics& k, const DynamicsStep& s, std::size_t begin,
                            std::size_t end) {
  const double half_h = 0.5 * s.h;
  for (std::size_t i = begin; i < end; ++i) {
    if (k.pending[i] > 0.5) {
      k.pending[i] = k.pending[i] - 1.0;
      continue;
    }
    const double rx = s.wx - k.vx[i];
    const double ry = s.wy - k.vy[i];
    const double rz = s.wz - k.vz[i];
    const double speed = std::sqrt(rx * rx + ry * ry + rz * rz);
    const double ks = s.drag_k * speed;
    const double ax = s.gx + ks * rx;
    const double ay = s.gy + ks * ry;
    const double az = s.gz + ks * rz;
    const double nvx = k.vx[i] + ax * s.h;
    const double nvy = k.vy[i] + ay * s.h;
    const double nvz = k.vz[i] + az * s.h;
    const double nlx = k.lx[i] * s.lateral_decay;
    const double nly = k.ly[i] * s.lateral_decay;
    const double nlz = k.lz[i] * s.lateral_decay;
    k.px[i] = (k.px[i] + (k.vx[i] + nvx) * half_h) + nlx * s.h;
    k.py[i] = (k.py[i] + (k.vy[i] + nvy) * half_h) + nly * s.h;
    k.pz[i] = (k.pz[i] + (k.vz[i] + nvz) * half_h) + nlz * s.h;
    k.vx[i] = nvx;
    k.vy[i] = nvy;
    k.vz[i] = nvz;
    k.lx[i] = nlx;
    k.ly[i] = nly;
    k.lz[i] = nlz;
    k.age[i] = k.age[i] + s.h;
  }
}

void integrate_clusters_scalar(ClusterKinematics& k, const DynamicsStep& step, int substeps) {
  for (int n = 0; n < substeps; ++n) integrate_range_scalar(k, step, 0, k.size());
}

void box_entry_range_scalar(double ox, double oy, double oz, RaySoA rays,
                            const OrientedBoxes& boxes, std::span<double> t_out,
                            std::span<std::int32_t> index_out, std::size_t begin,
                            std::size_t end) {
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const BoxFrame f = box_frame(ox, oy, oz, boxes, b);
    for (std::size_t i = begin; i < end; ++i) {
      const double dx = rays.dx[i];
      const double dy = rays.dy[i];
      const double lx = f.c * dx + f.s * dy;
      const double ly = f.c * dy - f.s * dx;
      const double lz = rays.dz[i];
      const double ix = 1.0 / lx;
      const double iy = 1.0 / ly;
      const double iz = 1.0 / lz;
      const double ax = (f.lo_x - f.ox) * ix, bx = (f.hi_x - f.ox) * ix;
      const double ay = (f.lo_y - f.oy) * iy, by = (f.hi_y - f.oy) * iy;
      const double az = (f.lo_z - f.oz) * iz, bz = (f.hi_z - f.oz) * iz;
      const double tmin = simd_max(simd_max(simd_min(ax, bx), simd_min(ay, by)), simd_min(az, bz));
      const double tmax = simd_min(simd_min(simd_max(ax, bx), simd_max(ay, by)), simd_max(az, bz));
      if (tmin <= tmax && tmin > 0.0 && tmin < t_out[i]) {
        t_out[i] = tmin;
        index_out[i] = static_cast<std::int32_t>(b);
      }
    }
  }
}

void nearest_box_entry_scalar(double ox, double oy, double oz, RaySoA rays,
                              const OrientedBoxes& boxes, std::span<double> t_out,
                              std::span<std::int32_t> index_out) {
  box_entry_range_scalar(ox, oy, oz, rays, boxes, t_out, index_out, 0, rays.dx.size());
}

}  // namespace rainsim::kernels
