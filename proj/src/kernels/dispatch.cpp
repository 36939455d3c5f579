#include <atomic>
#include <cstdlib>
#include <string>

#include "rainsim/kernels.hpp"

namespace rainsim::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(RAINSIM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

SimdLevel initial_level() {
  if (const char* env = std::getenv("RAINSIM_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return SimdLevel::Scalar;
    if (v == "avx2" && simd_level_available(SimdLevel::Avx2)) return SimdLevel::Avx2;
  }
  return simd_level_available(SimdLevel::Avx2) ? SimdLevel::Avx2 : SimdLevel::Scalar;
}

std::atomic<SimdLevel>& level_slot() {
  static std::atomic<SimdLevel> level{initial_level()};
  return level;
}

}  // namespace

std::string_view to_string(SimdLevel level) {
  switch (level) {
    case SimdLevel::Scalar: return "scalar";
    case SimdLevel::Avx2: return "avx2";
  }
  return "scalar";
}

bool simd_level_available(SimdLevel level) {
  switch (level) {
    case SimdLevel::Scalar: return true;
    case SimdLevel::Avx2: {
      static const bool has = cpu_has_avx2();
      return has;
    }
  }
  return false;
}

SimdLevel active_simd_level() { return level_slot().load(std::memory_order_relaxed); }

void set_simd_level(SimdLevel level) {
  level_slot().store(simd_level_available(level) ? level : SimdLevel::Scalar,
                     std::memory_order_relaxed);
}

#if !defined(RAINSIM_HAVE_AVX2)
void integrate_clusters_avx2(ClusterKinematics& k, const DynamicsStep& step, int substeps) {
  integrate_clusters_scalar(k, step, substeps);
}
void nearest_box_entry_avx2(double ox, double oy, double oz, RaySoA rays,
                            const OrientedBoxes& boxes, std::span<double> t_out,
                            std::span<std::int32_t> index_out) {
  nearest_box_entry_scalar(ox, oy, oz, rays, boxes, t_out, index_out);
}
#endif

void integrate_clusters(ClusterKinematics& k, const DynamicsStep& step, int substeps) {
  if (active_simd_level() == SimdLevel::Avx2) {
    integrate_clusters_avx2(k, step, substeps);
  } else {
    integrate_clusters_scalar(k, step, substeps);
  }
}

void nearest_box_entry(double ox, double oy, double oz, RaySoA rays, const OrientedBoxes& boxes,
                       std::span<double> t_out, std::span<std::int32_t> index_out) {
  if (active_simd_level() == SimdLevel::Avx2) {
    nearest_box_entry_avx2(ox, oy, oz, rays, boxes, t_out, index_out);
  } else {
    nearest_box_entry_scalar(ox, oy, oz, rays, boxes, t_out, index_out);
  }
}

}  // namespace rainsim::kernels
