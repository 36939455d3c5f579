#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference and, where the
// build and CPU allow it, an AVX2 variant. Variants evaluate the same IEEE
// operations in the same order (no FMA), so their outputs are bit-identical;
// the dispatcher only changes speed, never results.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace rainsim::kernels {

enum class SimdLevel { Scalar, Avx2 };

std::string_view to_string(SimdLevel level);
bool simd_level_available(SimdLevel level);
// Best available level, unless RAINSIM_SIMD=scalar|avx2 says otherwise.
SimdLevel active_simd_level();
// Forces a level for the current process (tests, benchmarks). Falls back to
// Scalar if the requested level is not available.
void set_simd_level(SimdLevel level);

// Structure-of-arrays view of the kinematic part of droplet clusters.
struct ClusterKinematics {
  std::vector<double> px, py, pz;
  std::vector<double> vx, vy, vz;
  std::vector<double> lx, ly, lz;  // lateral (wake) velocity
  std::vector<double> age;
  std::vector<double> pending;  // substeps left before the cluster moves

  std::size_t size() const { return px.size(); }
  void resize(std::size_t n);
};

struct DynamicsStep {
  double h = 0.01;  // substep length, s
  double gx = 0.0, gy = 0.0, gz = -9.81;
  double wx = 0.0, wy = 0.0, wz = 0.0;  // wind velocity
  double drag_k = 0.0;                  // rho_air Cd A / (2 m), 1/m
  double lateral_decay = 1.0;           // exp(-h / tau)
};

void integrate_clusters_scalar(ClusterKinematics& k, const DynamicsStep& step, int substeps);
void integrate_clusters_avx2(ClusterKinematics& k, const DynamicsStep& step, int substeps);
void integrate_clusters(ClusterKinematics& k, const DynamicsStep& step, int substeps);

// Oriented boxes (yaw about +Z) in structure-of-arrays form.
struct OrientedBoxes {
  std::vector<double> cx, cy, cz;
  std::vector<double> hx, hy, hz;  // half extents
  std::vector<double> cos_yaw, sin_yaw;

  std::size_t size() const { return cx.size(); }
  void push_back(double x, double y, double z, double half_x, double half_y, double half_z,
                 double yaw);
};

// For every ray direction (unit, shared origin), the entry distance of the
// nearest box the ray enters from outside. Rays that start inside a box never
// report that box. t_out/index_out must be pre-filled (e.g. +inf / -1) and are
// only lowered.
struct RaySoA {
  std::span<const double> dx, dy, dz;
};

void nearest_box_entry_scalar(double ox, double oy, double oz, RaySoA rays,
                              const OrientedBoxes& boxes, std::span<double> t_out,
                              std::span<std::int32_t> index_out);
void nearest_box_entry_avx2(double ox, double oy, double oz, RaySoA rays,
                            const OrientedBoxes& boxes, std::span<double> t_out,
                            std::span<std::int32_t> index_out);
void nearest_box_entry(double ox, double oy, double oz, RaySoA rays, const OrientedBoxes& boxes,
                       std::span<double> t_out, std::span<std::int32_t> index_out);

}  // namespace rainsim::kernels
