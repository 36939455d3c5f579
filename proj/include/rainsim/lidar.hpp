#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rainsim/kernels.hpp"
#include "rainsim/rng.hpp"
#include "rainsim/scene.hpp"
#include "rainsim/spray.hpp"
#include "rainsim/vec3.hpp"

namespace rainsim {

// Mechanical rotating lidar with a Waymo-like top sensor layout.
struct LidarModel {
  int channels = 64;
  double points_per_second = 1.6e6;
  double rotation_hz = 10.0;
  double max_range_m = 75.0;
  double vfov_lower_deg = -17.6;
  double vfov_upper_deg = 2.4;
  double mount_height_m = 2.0;  // above ground, on the ego's central axis
  double beam_divergence_rad = 2e-3;
  double drop_probability = 0.08;
  double intercept_gain_kappa = 4.0;

  // points_per_second / (rotation_hz * channels), rounded: 2500 at defaults.
  int azimuth_steps() const;
  std::size_t rays_per_frame() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(azimuth_steps());
  }
};

struct BeamPattern {
  std::vector<double> elevations;  // radians, channel 0 = lowest beam
  std::vector<double> azimuths;    // radians in [0, 2 pi), counter-clockwise from +X

  std::size_t ray_count() const { return elevations.size() * azimuths.size(); }
};

// Elevations uniformly spaced over the vertical field of view (both ends
// included); azimuths uniformly spaced over [0, 2 pi).
BeamPattern beam_pattern(const LidarModel& model);

struct Ray {
  Vec3 origin{};
  Vec3 direction{};  // unit
  int channel = 0;
  int azimuth_index = 0;
};

struct Hit {
  double range = 0.0;
  Vec3 point{};  // world frame
  SemanticClass cls = SemanticClass::None;
  Vec3 albedo{};
  std::optional<int> target_id;
  bool dropped = false;
  double intensity = -1.0;  // -1 until assigned
};

constexpr double kIntensitySentinel = -1.0;

struct LidarPoint {
  double x = 0.0;  // sensor frame: origin at the mount, +X along the ego heading
  double y = 0.0;
  double z = 0.0;
  double intensity = kIntensitySentinel;
};

// One revolution. The hit grid is channel-major (channel * azimuth_steps +
// azimuth); the point list holds the non-dropped hits in grid order.
struct LidarFrame {
  int frame_index = 0;
  double timestamp = 0.0;
  Pose ego_pose{};
  Vec3 origin{};  // world position of the sensor
  WeatherClass weather_class = WeatherClass::Clear;
  int channels = 0;
  int azimuth_steps = 0;
  std::vector<Hit> grid;

  std::vector<LidarPoint> points;
  std::vector<SemanticClass> classes;
  std::vector<std::uint32_t> point_cells;  // grid index of each point

  const Hit& hit(int channel, int azimuth) const {
    return grid[static_cast<std::size_t>(channel) * azimuth_steps + azimuth];
  }
  Hit& hit(int channel, int azimuth) {
    return grid[static_cast<std::size_t>(channel) * azimuth_steps + azimuth];
  }
  Vec3 to_sensor(const Vec3& world) const;
  // Recomputes points/classes/point_cells from the grid.
  void rebuild_points();
};

Vec3 lidar_origin(const VehicleState& ego, const LidarModel& model);

// Uniform voxel grid over droplet cluster centres. Each cluster is registered
// in every cell its centre +/- query_radius box overlaps, so walking the cells
// a ray crosses finds every cluster whose centre is within query_radius of it.
class ClusterGrid {
 public:
  ClusterGrid(std::span<const DropletCluster> clusters, double cell_size, double query_radius);

  bool empty() const { return cell_start_.empty(); }
  double query_radius() const { return query_radius_; }
  double cell_size() const { return cell_; }

  // Calls visit(ids, t_enter) for each non-empty cell the segment
  // origin + t * dir, t in [0, t_max], passes through, in order of increasing
  // t. Stops early when visit returns false.
  template <typename Visit>
  void traverse(const Vec3& origin, const Vec3& dir, double t_max, Visit&& visit) const;

 private:
  std::size_t cell_index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(iz) * ny_ + static_cast<std::size_t>(iy)) * nx_ +
           static_cast<std::size_t>(ix);
  }

  double cell_;
  double query_radius_;
  Vec3 lo_{};
  int nx_ = 0, ny_ = 0, nz_ = 0;
  std::vector<std::uint32_t> cell_start_;  // size cells + 1
  std::vector<std::uint32_t> ids_;
};

// Frame-constant geometry for casting: solid boxes (the ego is excluded; its
// own returns are filtered), road, droplet clusters and their grid.
struct ScanTargets {
  ScanTargets(const Scene& scene, std::span<const DropletCluster> clusters,
              const LidarModel& model, const SprayParams& spray);

  LidarModel model;
  SprayParams spray;
  RoadSurface road;
  kernels::OrientedBoxes boxes;
  std::vector<int> box_ids;
  std::vector<Vec3> box_albedo;
  std::span<const DropletCluster> clusters;
  ClusterGrid grid;
};

// Probability that a droplet cluster at range R intercepts the beam:
// kappa * n * pi (d/2)^2 / (pi (R theta / 2)^2), clamped to [0, 1].
double intercept_probability(const LidarModel& model, const SprayParams& spray, double range);

// Radius of the beam footprint at range R, R * theta / 2.
inline double footprint_radius(const LidarModel& model, double range) {
  return 0.5 * range * model.beam_divergence_rad;
}

// Nearest-first resolution of one ray against ground, boxes and clusters.
// Clusters are transparent with probability 1 - p_int; the transmission draw
// for a (ray, cluster) pair comes from `intercept_key` and the pair's
// coordinates, so the result does not depend on traversal order.
// `box_hint` lets batch callers pass a precomputed nearest box entry.
struct BoxEntry {
  double t = 0.0;
  std::int32_t index = -1;
};

Hit cast(const Ray& ray, const ScanTargets& targets, PhiloxKey intercept_key,
         std::optional<BoxEntry> box_hint = std::nullopt);

// Marks the hit dropped with probability p.
Hit apply_dropoff(Hit hit, double drop_probability, RandomStream& rng);

struct ScanOptions {
  int frame_index = 0;
  double timestamp = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Casts every ray of the beam pattern from the ego's sensor at one shared
// timestamp. Intensities are left at the sentinel.
LidarFrame scan_frame(const Scene& scene, std::span<const DropletCluster> clusters,
                      const LidarModel& model, const SprayParams& spray,
                      const ScanOptions& options);

// --- template implementation ---

template <typename Visit>
void ClusterGrid::traverse(const Vec3& origin, const Vec3& dir, double t_max,
                           Visit&& visit) const {
  if (empty()) return;
  const double hi[3] = {lo_.x + nx_ * cell_, lo_.y + ny_ * cell_, lo_.z + nz_ * cell_};
  const double lo[3] = {lo_.x, lo_.y, lo_.z};
  const double o[3] = {origin.x, origin.y, origin.z};
  const double d[3] = {dir.x, dir.y, dir.z};

  double t0 = 0.0, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) return;
      continue;
    }
    const double inv = 1.0 / d[a];
    double ta = (lo[a] - o[a]) * inv;
    double tb = (hi[a] - o[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    if (ta > t0) t0 = ta;
    if (tb < t1) t1 = tb;
    if (t0 > t1) return;
  }

  const int n[3] = {nx_, ny_, nz_};
  int cell[3], step[3];
  double t_next[3], t_delta[3];
  for (int a = 0; a < 3; ++a) {
    const double p = o[a] + t0 * d[a];
    int c = static_cast<int>(std::floor((p - lo[a]) / cell_));
    cell[a] = c < 0 ? 0 : (c >= n[a] ? n[a] - 1 : c);
    if (d[a] > 0.0) {
      step[a] = 1;
      t_next[a] = (lo[a] + (cell[a] + 1) * cell_ - o[a]) / d[a];
      t_delta[a] = cell_ / d[a];
    } else if (d[a] < 0.0) {
      step[a] = -1;
      t_next[a] = (lo[a] + cell[a] * cell_ - o[a]) / d[a];
      t_delta[a] = -cell_ / d[a];
    } else {
      step[a] = 0;
      t_next[a] = std::numeric_limits<double>::infinity();
      t_delta[a] = std::numeric_limits<double>::infinity();
    }
  }

  double t_enter = t0;
  for (;;) {
    const std::size_t idx = cell_index(cell[0], cell[1], cell[2]);
    const std::uint32_t b = cell_start_[idx], e = cell_start_[idx + 1];
    if (b != e) {
      if (!visit(std::span<const std::uint32_t>(ids_.data() + b, e - b), t_enter)) return;
    }
    int axis = 0;
    if (t_next[1] < t_next[axis]) axis = 1;
    if (t_next[2] < t_next[axis]) axis = 2;
    if (t_next[axis] > t1) return;
    t_enter = t_next[axis];
    cell[axis] += step[axis];
    if (cell[axis] < 0 || cell[axis] >= n[axis]) return;
    t_next[axis] += t_delta[axis];
  }
}

}  // namespace rainsim
