#include "rainsim/spray.hpp"

#include <algorithm>
#include <cmath>

#include "rainsim/kernels.hpp"

namespace rainsim {

double droplet_volume(double diameter) {
  return std::numbers::pi / 6.0 * diameter * diameter * diameter;
}

EmissionState initial_emission_state(const SprayParams& params, RandomStream& rng) {
  EmissionState s;
  s.weight = rng.uniform(params.weight_min, params.weight_max);
  s.time_to_weight_change = params.weight_interval_s;
  s.wake_sign = rng.uniform() < 0.5 ? 1 : -1;
  s.time_to_flip = rng.exponential(params.wake_flip_mean_s);
  return s;
}

EmissionState wake_update(EmissionState state, double dt, const SprayParams& params,
                          RandomStream& rng) {
  state.time_to_weight_change -= dt;
  while (state.time_to_weight_change <= 0.0) {
    state.weight = rng.uniform(params.weight_min, params.weight_max);
    state.time_to_weight_change += params.weight_interval_s;
  }
  state.time_to_flip -= dt;
  while (state.time_to_flip <= 0.0) {
    state.wake_sign = -state.wake_sign;
    state.time_to_flip += rng.exponential(params.wake_flip_mean_s);
  }
  return state;
}

double volume_rate_tread_pickup(const TireSpec& tire, double v) {
  return tire.groove_width_fraction_K * tire.contact_width_b * v * tire.groove_depth_h_groove;
}

double volume_rate_side_wave(const TireSpec& tire, double v, double water_depth) {
  const double k = tire.groove_width_fraction_K;
  const double excess =
      water_depth - k * tire.groove_depth_h_groove - (1.0 - k) * tire.film_depth_h_film;
  return std::max(0.0, 0.5 * tire.contact_width_b * v * excess);
}

std::int64_t clusters_for_volume(double volume, const SprayParams& params, double& carry) {
  const double per_cluster = droplet_volume(params.droplet_diameter) * params.cluster_size;
  const double exact = volume / per_cluster + carry;
  const double whole = std::floor(exact);
  carry = exact - whole;
  return static_cast<std::int64_t>(whole);
}

namespace {

Vec3 sample_in_ball(RandomStream& rng, double radius) {
  for (;;) {
    const Vec3 p{rng.uniform(-radius, radius), rng.uniform(-radius, radius),
                 rng.uniform(-radius, radius)};
    if (p.squared_norm() <= radius * radius) return p;
  }
}

Vec3 relative_direction(double n, double l, double side_sign) {
  return {-std::cos(l) * std::cos(n), side_sign * std::cos(l) * std::sin(n), std::sin(l)};
}

}  // namespace

std::vector<DropletCluster> emit(const WheelState& wheel, const WeatherConfig& weather,
                                 const RoadSurface& road, const SprayParams& params,
                                 EmissionState& state, double dt, EmitContext& ctx) {
  const VehicleState& v = wheel.vehicle;
  if (v.speed <= 0.0) return {};

  const double wd = water_film_depth(road, weather.rain_rate_mm_per_h);
  TireSpec groove_fill = v.tire;
  groove_fill.groove_depth_h_groove = std::min(v.tire.groove_depth_h_groove, wd);
  const double vr_tp = volume_rate_tread_pickup(groove_fill, v.speed);
  const double vr_sd = volume_rate_side_wave(v.tire, v.speed, wd);

  const auto wheel_index = static_cast<std::size_t>(wheel.side);
  const double scale =
      params.emission_scale * state.weight * state.multiplier(wheel.side, params.wake_asymmetry_a) * dt;
  std::int64_t n_tp = clusters_for_volume(scale * vr_tp, params, state.carry[wheel_index][0]);
  std::int64_t n_sd = clusters_for_volume(scale * vr_sd, params, state.carry[wheel_index][1]);

  const std::int64_t cap = params.max_clusters_per_wheel_per_frame;
  if (cap > 0 && n_tp + n_sd > cap) {
    const std::int64_t total = n_tp + n_sd;
    const auto capped_tp = static_cast<std::int64_t>(
        std::floor(static_cast<double>(n_tp) * static_cast<double>(cap) / static_cast<double>(total)));
    ctx.suppressed_by_cap += total - cap;
    n_tp = capped_tp;
    n_sd = cap - capped_tp;
  }

  const int substeps = std::max(1, static_cast<int>(std::lround(dt / params.substep_dt_s)));
  const double h = dt / substeps;
  const double side_sign = wheel.side == WheelSide::Left ? 1.0 : -1.0;
  const Vec2 wheel_body = v.rear_wheel_offsets[wheel_index];
  const double half_b = 0.5 * v.tire.contact_width_b;
  const Vec3 lateral_dir{-std::sin(v.pose.yaw), std::cos(v.pose.yaw), 0.0};
  const Vec3 lateral = lateral_dir * (state.wake_sign * params.lateral_speed_init);
  const Vec3 vehicle_velocity = v.velocity();
  RandomStream& rng = *ctx.rng;

  std::vector<DropletCluster> out;
  out.reserve(static_cast<std::size_t>(n_tp + n_sd));
  auto spawn = [&](SprayMechanism mechanism) {
    DropletCluster c;
    c.uid = (*ctx.next_uid)++;
    c.vehicle_id = v.id;
    c.side = wheel.side;
    c.mechanism = mechanism;
    c.pending_substeps = static_cast<int>(rng.uniform_int(0, substeps - 1));
    const double birth = c.pending_substeps * h;

    Vec3 body;
    double n, l, speed;
    if (mechanism == SprayMechanism::TreadPickup) {
      body = {-0.5 * v.box.length - params.spawn_clearance_m,
              wheel_body.y + rng.uniform(-half_b, half_b), params.tread_pickup_height_m};
      n = rng.uniform(params.tread_pickup_n.lo, params.tread_pickup_n.hi);
      l = rng.uniform(params.tread_pickup_l.lo, params.tread_pickup_l.hi);
      speed = v.speed;
    } else {
      body = {wheel_body.x + rng.uniform(-half_b, half_b),
              side_sign * (0.5 * v.box.width + params.spawn_clearance_m), params.side_wave_height_m};
      n = rng.uniform(params.side_wave_n.lo, params.side_wave_n.hi);
      l = rng.uniform(params.side_wave_l.lo, params.side_wave_l.hi);
      speed = params.side_wave_speed_fraction * v.speed;
    }
    c.position = v.to_world(body) + vehicle_velocity * birth;
    c.velocity = vehicle_velocity + rotate_z(relative_direction(n, l, side_sign) * speed, v.pose.yaw);
    c.lateral_velocity = lateral;
    c.offsets.reserve(static_cast<std::size_t>(std::max(0, params.cluster_size - 1)));
    for (int i = 1; i < params.cluster_size; ++i) {
      c.offsets.push_back(sample_in_ball(rng, params.cluster_radius));
    }
    out.push_back(std::move(c));
  };
  for (std::int64_t i = 0; i < n_tp; ++i) spawn(SprayMechanism::TreadPickup);
  for (std::int64_t i = 0; i < n_sd; ++i) spawn(SprayMechanism::SideWave);
  return out;
}

void integrate(std::vector<DropletCluster>& clusters, const WeatherConfig& weather,
               double dt_frame, const SprayParams& params) {
  if (clusters.empty()) return;
  const int substeps =
      std::max(1, static_cast<int>(std::lround(dt_frame / params.substep_dt_s)));

  kernels::DynamicsStep step;
  step.h = dt_frame / substeps;
  step.gx = 0.0;
  step.gy = 0.0;
  step.gz = -params.gravity;
  step.wx = weather.wind_velocity.x;
  step.wy = weather.wind_velocity.y;
  step.wz = weather.wind_velocity.z;
  const double d = params.droplet_diameter;
  const double area = std::numbers::pi * 0.25 * d * d;
  const double mass = params.water_density * droplet_volume(d);
  step.drag_k = params.air_density * params.drag_cd * area / (2.0 * mass);
  step.lateral_decay =
      params.lateral_decay_tau_s > 0.0 ? std::exp(-step.h / params.lateral_decay_tau_s) : 0.0;

  thread_local kernels::ClusterKinematics k;
  const std::size_t n = clusters.size();
  k.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = clusters[i];
    k.px[i] = c.position.x;
    k.py[i] = c.position.y;
    k.pz[i] = c.position.z;
    k.vx[i] = c.velocity.x;
    k.vy[i] = c.velocity.y;
    k.vz[i] = c.velocity.z;
    k.lx[i] = c.lateral_velocity.x;
    k.ly[i] = c.lateral_velocity.y;
    k.lz[i] = c.lateral_velocity.z;
    k.age[i] = c.age;
    k.pending[i] = c.pending_substeps;
  }
  kernels::integrate_clusters(k, step, substeps);
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = clusters[i];
    c.position = {k.px[i], k.py[i], k.pz[i]};
    c.velocity = {k.vx[i], k.vy[i], k.vz[i]};
    c.lateral_velocity = {k.lx[i], k.ly[i], k.lz[i]};
    c.age = k.age[i];
    c.pending_substeps = static_cast<int>(k.pending[i]);
  }
}

std::optional<AnnihilationReason> annihilation_reason(const DropletCluster& c,
                                                      const Scene& scene,
                                                      const Vec3& lidar_origin,
                                                      const SprayParams& params) {
  if (c.position.z <= 0.0) return AnnihilationReason::Collision;
  for (const VehicleState* v : scene.vehicles()) {
    if (v->contains(c.position)) return AnnihilationReason::Collision;
  }
  if ((c.position - lidar_origin).squared_norm() > params.max_range_m * params.max_range_m) {
    return AnnihilationReason::Range;
  }
  if (c.age > params.max_age_s) return AnnihilationReason::Age;
  return std::nullopt;
}

AnnihilationCounts annihilate(std::vector<DropletCluster>& clusters, const Scene& scene,
                              const Vec3& lidar_origin, const SprayParams& params) {
  AnnihilationCounts counts;
  std::erase_if(clusters, [&](const DropletCluster& c) {
    const auto reason = annihilation_reason(c, scene, lidar_origin, params);
    if (!reason) return false;
    switch (*reason) {
      case AnnihilationReason::Collision: ++counts.collision; break;
      case AnnihilationReason::Range: ++counts.range; break;
      case AnnihilationReason::Age: ++counts.age; break;
    }
    return true;
  });
  return counts;
}

SpraySystem::SpraySystem(SprayParams params, std::uint64_t seed)
    : params_(std::move(params)), seed_(seed) {}

SpraySystem::VehicleStreams& SpraySystem::streams_for(int vehicle_id) {
  auto it = vehicles_.find(vehicle_id);
  if (it == vehicles_.end()) {
    const auto id = static_cast<std::uint64_t>(vehicle_id);
    VehicleStreams vs{EmissionState{}, RandomStream(derive_key(seed_, Stream::Wake, id)),
                      RandomStream(derive_key(seed_, Stream::Emission, id))};
    vs.state = initial_emission_state(params_, vs.wake);
    it = vehicles_.emplace(vehicle_id, std::move(vs)).first;
  }
  return it->second;
}

const EmissionState* SpraySystem::emission_state(int vehicle_id) const {
  const auto it = vehicles_.find(vehicle_id);
  return it == vehicles_.end() ? nullptr : &it->second.state;
}

std::size_t SpraySystem::emit_frame(const Scene& scene, double dt) {
  const std::size_t before = clusters_.size();
  const double cluster_volume = droplet_volume(params_.droplet_diameter) * params_.cluster_size;
  for (const VehicleState* v : scene.vehicles()) {
    if (!v->emits_spray) continue;
    VehicleStreams& vs = streams_for(v->id);
    vs.state = wake_update(vs.state, dt, params_, vs.wake);
    for (WheelSide side : {WheelSide::Left, WheelSide::Right}) {
      EmitContext ctx{&vs.emission, &next_uid_};
      auto fresh = emit(WheelState{*v, side}, scene.weather(), scene.road(), params_, vs.state,
                        dt, ctx);
      counters_.suppressed_by_cap += static_cast<std::uint64_t>(ctx.suppressed_by_cap);
      const double volume = static_cast<double>(fresh.size()) * cluster_volume;
      (side == WheelSide::Left ? counters_.emitted_volume_left : counters_.emitted_volume_right) +=
          volume;
      counters_.emitted += fresh.size();
      clusters_.insert(clusters_.end(), std::make_move_iterator(fresh.begin()),
                       std::make_move_iterator(fresh.end()));
    }
  }
  return clusters_.size() - before;
}

void SpraySystem::integrate_frame(const WeatherConfig& weather, double dt) {
  integrate(clusters_, weather, dt, params_);
}

AnnihilationCounts SpraySystem::annihilate_frame(const Scene& scene, const Vec3& lidar_origin) {
  const AnnihilationCounts counts = annihilate(clusters_, scene, lidar_origin, params_);
  counters_.annihilated += counts;
  return counts;
}

}  // namespace rainsim
