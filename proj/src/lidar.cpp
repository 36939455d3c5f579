#include "rainsim/lidar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "rainsim/error.hpp"

namespace rainsim {

int LidarModel::azimuth_steps() const {
  return static_cast<int>(std::lround(points_per_second / (rotation_hz * channels)));
}

BeamPattern beam_pattern(const LidarModel& model) {
  BeamPattern p;
  const double lo = deg_to_rad(model.vfov_lower_deg);
  const double hi = deg_to_rad(model.vfov_upper_deg);
  p.elevations.resize(static_cast<std::size_t>(model.channels));
  for (int c = 0; c < model.channels; ++c) {
    p.elevations[c] = model.channels == 1 ? lo : lo + (hi - lo) * c / (model.channels - 1);
  }
  const int steps = model.azimuth_steps();
  p.azimuths.resize(static_cast<std::size_t>(steps));
  for (int a = 0; a < steps; ++a) {
    p.azimuths[a] = 2.0 * std::numbers::pi * a / steps;
  }
  return p;
}

Vec3 LidarFrame::to_sensor(const Vec3& world) const {
  return rotate_z(world - origin, -ego_pose.yaw);
}

void LidarFrame::rebuild_points() {
  points.clear();
  classes.clear();
  point_cells.clear();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Hit& h = grid[i];
    if (h.cls == SemanticClass::None || h.dropped) continue;
    const Vec3 s = to_sensor(h.point);
    points.push_back({s.x, s.y, s.z, h.intensity});
    classes.push_back(h.cls);
    point_cells.push_back(static_cast<std::uint32_t>(i));
  }
}

Vec3 lidar_origin(const VehicleState& ego, const LidarModel& model) {
  return {ego.pose.x, ego.pose.y, ego.pose.z + model.mount_height_m};
}

double intercept_probability(const LidarModel& model, const SprayParams& spray, double range) {
  if (range <= 0.0) throw DomainError("intercept_probability: range must be > 0");
  const double r_drop = 0.5 * spray.droplet_diameter;
  const double r_beam = footprint_radius(model, range);
  const double ratio = model.intercept_gain_kappa * spray.cluster_size * std::numbers::pi *
                       r_drop * r_drop / (std::numbers::pi * r_beam * r_beam);
  return std::clamp(ratio, 0.0, 1.0);
}

ScanTargets::ScanTargets(const Scene& scene, std::span<const DropletCluster> clusters_in,
                         const LidarModel& model_in, const SprayParams& spray_in)
    : model(model_in),
      spray(spray_in),
      road(scene.road()),
      clusters(clusters_in),
      grid(clusters_in, 1.0,
           spray_in.cluster_radius + footprint_radius(model_in, model_in.max_range_m)) {
  for (const auto& v : scene.traffic()) {
    const Vec3 c = v.box_center();
    boxes.push_back(c.x, c.y, c.z, 0.5 * v.box.length, 0.5 * v.box.width, 0.5 * v.box.height,
                    v.pose.yaw);
    box_ids.push_back(v.id);
    box_albedo.push_back(v.albedo_rgb);
  }
}

namespace {

struct SprayCandidate {
  double t = std::numeric_limits<double>::infinity();
  std::uint64_t uid = 0;
  bool found = false;
};

SprayCandidate first_intercepting_cluster(const Ray& ray, const ScanTargets& tg, double limit,
                                          PhiloxKey key) {
  SprayCandidate best;
  if (tg.grid.empty()) return best;
  const double theta_half = 0.5 * tg.model.beam_divergence_rad;
  // Any cluster registered in a cell lies within this distance (along the ray)
  // of the cell's entry point.
  const double slack = std::sqrt(3.0) * tg.grid.cell_size() + 2.0 * tg.grid.query_radius();
  const Vec3& o = ray.origin;
  const Vec3& d = ray.direction;

  tg.grid.traverse(o, d, limit, [&](std::span<const std::uint32_t> ids, double t_enter) {
    if (best.found && t_enter - slack > best.t) return false;
    for (const std::uint32_t id : ids) {
      const DropletCluster& c = tg.clusters[id];
      const Vec3 w = c.position - o;
      const double t = w.dot(d);
      if (t <= 0.0 || t > limit) continue;
      if (best.found && (t > best.t || (t == best.t && c.uid >= best.uid))) continue;
      const double reach = tg.spray.cluster_radius + t * theta_half;
      if ((w - d * t).squared_norm() > reach * reach) continue;
      const double u = unit_at(key, static_cast<std::uint32_t>(ray.channel),
                               static_cast<std::uint32_t>(ray.azimuth_index),
                               static_cast<std::uint32_t>(c.uid),
                               static_cast<std::uint32_t>(c.uid >> 32));
      if (u < intercept_probability(tg.model, tg.spray, t)) {
        best = {t, c.uid, true};
      }
    }
    return true;
  });
  return best;
}

BoxEntry nearest_box(const Ray& ray, const ScanTargets& tg) {
  double t = std::numeric_limits<double>::infinity();
  std::int32_t index = -1;
  const double dx = ray.direction.x, dy = ray.direction.y, dz = ray.direction.z;
  kernels::nearest_box_entry_scalar(ray.origin.x, ray.origin.y, ray.origin.z,
                                    {std::span(&dx, 1), std::span(&dy, 1), std::span(&dz, 1)},
                                    tg.boxes, std::span(&t, 1), std::span(&index, 1));
  return {t, index};
}

}  // namespace

Hit cast(const Ray& ray, const ScanTargets& tg, PhiloxKey intercept_key,
         std::optional<BoxEntry> box_hint) {
  const Vec3& o = ray.origin;
  const Vec3& d = ray.direction;

  Hit solid;
  double t_solid = std::numeric_limits<double>::infinity();
  if (d.z < 0.0) {
    const double t = -o.z / d.z;
    const Vec3 p = o + d * t;
    if (t > 0.0 && tg.road.extent.contains(p.x, p.y)) {
      t_solid = t;
      solid.cls = SemanticClass::Ground;
      solid.albedo = tg.road.albedo_rgb;
    }
  }
  const BoxEntry box = box_hint ? *box_hint : nearest_box(ray, tg);
  if (box.index >= 0 && box.t < t_solid) {
    t_solid = box.t;
    solid.cls = SemanticClass::Vehicle;
    solid.albedo = tg.box_albedo[box.index];
    solid.target_id = tg.box_ids[box.index];
  }

  const double limit = std::min(t_solid, tg.model.max_range_m);
  const SprayCandidate spray = first_intercepting_cluster(ray, tg, limit, intercept_key);
  if (spray.found) {
    Hit h;
    h.cls = SemanticClass::Spray;
    h.range = spray.t;
    h.point = o + d * spray.t;
    return h;
  }
  if (solid.cls != SemanticClass::None && t_solid <= tg.model.max_range_m) {
    solid.range = t_solid;
    solid.point = o + d * t_solid;
    return solid;
  }
  return Hit{};
}

Hit apply_dropoff(Hit hit, double drop_probability, RandomStream& rng) {
  if (hit.cls == SemanticClass::None) return hit;
  if (rng.uniform() < drop_probability) hit.dropped = true;
  return hit;
}

LidarFrame scan_frame(const Scene& scene, std::span<const DropletCluster> clusters,
                      const LidarModel& model, const SprayParams& spray,
                      const ScanOptions& options) {
  const BeamPattern pattern = beam_pattern(model);
  const int channels = model.channels;
  const int steps = static_cast<int>(pattern.azimuths.size());
  const std::size_t n_rays = pattern.ray_count();

  LidarFrame frame;
  frame.frame_index = options.frame_index;
  frame.timestamp = options.timestamp;
  frame.ego_pose = scene.ego().pose;
  frame.origin = lidar_origin(scene.ego(), model);
  frame.weather_class = scene.weather().weather_class;
  frame.channels = channels;
  frame.azimuth_steps = steps;
  frame.grid.assign(n_rays, Hit{});

  const double yaw = scene.ego().pose.yaw;
  std::vector<double> cos_az(steps), sin_az(steps);
  for (int a = 0; a < steps; ++a) {
    cos_az[a] = std::cos(pattern.azimuths[a] + yaw);
    sin_az[a] = std::sin(pattern.azimuths[a] + yaw);
  }
  std::vector<double> dx(n_rays), dy(n_rays), dz(n_rays);
  for (int c = 0; c < channels; ++c) {
    const double ce = std::cos(pattern.elevations[c]);
    const double se = std::sin(pattern.elevations[c]);
    for (int a = 0; a < steps; ++a) {
      const std::size_t i = static_cast<std::size_t>(c) * steps + a;
      dx[i] = ce * cos_az[a];
      dy[i] = ce * sin_az[a];
      dz[i] = se;
    }
  }

  const ScanTargets targets(scene, clusters, model, spray);
  std::vector<double> box_t(n_rays, std::numeric_limits<double>::infinity());
  std::vector<std::int32_t> box_index(n_rays, -1);
  const Vec3 o = frame.origin;
  kernels::nearest_box_entry(o.x, o.y, o.z, {dx, dy, dz}, targets.boxes, box_t, box_index);

  const PhiloxKey intercept_key =
      derive_key(options.seed, Stream::Intercept, static_cast<std::uint64_t>(options.frame_index));
  const PhiloxKey drop_key =
      derive_key(options.seed, Stream::Dropoff, static_cast<std::uint64_t>(options.frame_index));

  auto run_channels = [&](int c_begin, int c_end) {
    for (int c = c_begin; c < c_end; ++c) {
      for (int a = 0; a < steps; ++a) {
        const std::size_t i = static_cast<std::size_t>(c) * steps + a;
        const Ray ray{o, {dx[i], dy[i], dz[i]}, c, a};
        Hit h = cast(ray, targets, intercept_key, BoxEntry{box_t[i], box_index[i]});
        RandomStream drop_rng(drop_key, static_cast<std::uint32_t>(c),
                              static_cast<std::uint32_t>(a));
        frame.grid[i] = apply_dropoff(std::move(h), model.drop_probability, drop_rng);
      }
    }
  };

  const int threads = std::clamp(options.threads, 1, channels);
  if (threads == 1) {
    run_channels(0, channels);
  } else {
    std::vector<std::jthread> pool;
    const int per = (channels + threads - 1) / threads;
    for (int c0 = 0; c0 < channels; c0 += per) {
      pool.emplace_back(run_channels, c0, std::min(channels, c0 + per));
    }
  }

  frame.rebuild_points();
  return frame;
}

}  // namespace rainsim
