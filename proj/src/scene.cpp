#include "rainsim/scene.hpp"

#include <algorithm>
#include <cmath>

#include "rainsim/error.hpp"

namespace rainsim {

std::string_view to_string(WeatherClass c) {
  switch (c) {
    case WeatherClass::Clear: return "Clear";
    case WeatherClass::WetGround: return "WetGround";
    case WeatherClass::LightRain: return "LightRain";
    case WeatherClass::HeavyRain: return "HeavyRain";
  }
  return "Clear";
}

std::optional<WeatherClass> weather_class_from_string(std::string_view s) {
  for (auto c : {WeatherClass::Clear, WeatherClass::WetGround, WeatherClass::LightRain,
                 WeatherClass::HeavyRain}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::string_view to_string(SemanticClass c) {
  switch (c) {
    case SemanticClass::None: return "None";
    case SemanticClass::Ground: return "Ground";
    case SemanticClass::Vehicle: return "Vehicle";
    case SemanticClass::Spray: return "Spray";
  }
  return "None";
}

double default_attenuation_alpha(double rain_rate_mm_per_h) {
  if (rain_rate_mm_per_h <= 0.0) return 0.0;
  return 0.01 * std::pow(rain_rate_mm_per_h / 10.0, 0.6);
}

Vec3 VehicleState::heading() const { return {std::cos(pose.yaw), std::sin(pose.yaw), 0.0}; }

Vec3 VehicleState::to_world(const Vec3& body) const {
  const Vec3 r = rotate_z(body, pose.yaw);
  return {pose.x + r.x, pose.y + r.y, pose.z + r.z};
}

Vec3 VehicleState::to_body(const Vec3& world) const {
  return rotate_z({world.x - pose.x, world.y - pose.y, world.z - pose.z}, -pose.yaw);
}

bool VehicleState::contains(const Vec3& world, double margin) const {
  const Vec3 b = to_body(world);
  return std::abs(b.x) <= 0.5 * box.length + margin && std::abs(b.y) <= 0.5 * box.width + margin &&
         b.z >= -margin && b.z <= box.height + margin;
}

namespace {

VehicleState make_vehicle(int id, const VehicleTemplate& body, double x, double y, double speed,
                          const Vec3& albedo) {
  VehicleState v;
  v.id = id;
  v.pose = {x, y, 0.0, 0.0};
  v.speed = speed;
  v.box = body.box;
  v.tire = body.tire;
  v.rear_wheel_offsets = body.rear_wheel_offsets;
  v.albedo_rgb = albedo;
  v.semantic_class = SemanticClass::Vehicle;
  return v;
}

bool lane_gap_ok(double x, double y, double length, double min_gap, const VehicleState& ego,
                 const std::vector<VehicleState>& others, const VehicleState* self) {
  auto clear_of = [&](const VehicleState& o) {
    if (&o == self) return true;
    if (std::abs(o.pose.y - y) > 0.5 * (o.box.width + 0.5)) return true;
    return std::abs(o.pose.x - x) >= 0.5 * (o.box.length + length) + min_gap;
  };
  if (!clear_of(ego)) return false;
  return std::all_of(others.begin(), others.end(), clear_of);
}

Vec3 sample_albedo(RandomStream& rng) {
  const double r = rng.uniform(0.1, 0.9);
  const double g = rng.uniform(0.1, 0.9);
  const double b = rng.uniform(0.1, 0.9);
  return {r, g, b};
}

}  // namespace

std::vector<VehicleState> spawn_traffic(const TrafficSpec& spec, const VehicleState& ego,
                                        RandomStream& rng) {
  std::vector<VehicleState> out;
  int next_id = ego.id + 1;
  if (!spec.placed.empty()) {
    for (const auto& p : spec.placed) {
      const Vec3 albedo = p.albedo_rgb ? *p.albedo_rgb : sample_albedo(rng);
      out.push_back(make_vehicle(next_id++, spec.body, ego.pose.x + p.offset_x, p.lane_y,
                                 p.speed, albedo));
    }
    return out;
  }

  const auto count = rng.uniform_int(spec.count_min, spec.count_max);
  const auto lanes = static_cast<std::int64_t>(spec.lane_offsets_y.size());
  for (std::int64_t i = 0; i < count; ++i) {
    double x = 0.0, y = 0.0, speed = 0.0;
    for (int attempt = 0; attempt < 32; ++attempt) {
      y = spec.lane_offsets_y[static_cast<std::size_t>(rng.uniform_int(0, lanes - 1))];
      x = ego.pose.x + rng.uniform(-spec.corridor_behind_m, spec.corridor_ahead_m);
      speed = rng.uniform(spec.speed_min, spec.speed_max);
      if (lane_gap_ok(x, y, spec.body.box.length, spec.min_gap_m, ego, out, nullptr)) break;
    }
    out.push_back(make_vehicle(next_id++, spec.body, x, y, speed, sample_albedo(rng)));
  }
  return out;
}

Scene::Scene(WeatherConfig weather, RoadSurface road, TrafficSpec traffic, VehicleState ego,
             std::vector<VehicleState> others, RandomStream rng, double time)
    : weather_(std::move(weather)),
      road_(std::move(road)),
      traffic_spec_(std::move(traffic)),
      ego_(std::move(ego)),
      traffic_(std::move(others)),
      rng_(rng),
      time_(time) {
  std::sort(traffic_.begin(), traffic_.end(),
            [](const VehicleState& a, const VehicleState& b) { return a.id < b.id; });
}

std::vector<const VehicleState*> Scene::vehicles() const {
  std::vector<const VehicleState*> out;
  out.reserve(traffic_.size() + 1);
  out.push_back(&ego_);
  for (const auto& v : traffic_) out.push_back(&v);
  return out;
}

const VehicleState* Scene::find_vehicle(int id) const {
  if (ego_.id == id) return &ego_;
  for (const auto& v : traffic_) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

void Scene::respawn(VehicleState& v) {
  const auto& spec = traffic_spec_;
  const auto lanes = static_cast<std::int64_t>(spec.lane_offsets_y.size());
  // A vehicle faster than the ego can only enter the corridor from behind,
  // a slower one only from the front.
  double speed = rng_.uniform(spec.speed_min, spec.speed_max);
  const bool from_behind = speed > ego_.speed;
  const double x = from_behind ? ego_.pose.x - spec.corridor_behind_m
                               : ego_.pose.x + spec.corridor_ahead_m;
  double y = v.pose.y;
  for (int attempt = 0; attempt < 8; ++attempt) {
    const double candidate =
        spec.lane_offsets_y[static_cast<std::size_t>(rng_.uniform_int(0, lanes - 1))];
    if (lane_gap_ok(x, candidate, v.box.length, spec.min_gap_m, ego_, traffic_, &v)) {
      y = candidate;
      break;
    }
  }
  v.pose.x = x;
  v.pose.y = y;
  v.speed = speed;
  v.albedo_rgb = sample_albedo(rng_);
  ++respawns_;
}

Scene step(Scene scene, double dt) {
  auto advance = [dt](VehicleState& v) {
    if (v.speed == 0.0) return;
    v.pose.x += v.speed * dt * std::cos(v.pose.yaw);
    v.pose.y += v.speed * dt * std::sin(v.pose.yaw);
  };
  advance(scene.ego_);
  for (auto& v : scene.traffic_) advance(v);

  const auto& spec = scene.traffic_spec_;
  for (auto& v : scene.traffic_) {
    const double rel = v.pose.x - scene.ego_.pose.x;
    if (rel > spec.corridor_ahead_m || rel < -spec.corridor_behind_m) scene.respawn(v);
  }
  scene.time_ += dt;
  return scene;
}

double water_film_depth(const RoadSurface& road, double rain_rate_I) {
  if (!(road.slope_S > 0.0)) throw DomainError("water_film_depth: slope S must be > 0");
  if (!(road.drainage_length_L > 0.0))
    throw DomainError("water_film_depth: drainage length L must be > 0");
  if (!(road.texture_depth_T >= 0.0))
    throw DomainError("water_film_depth: texture depth T must be >= 0");
  if (!(rain_rate_I >= 0.0)) throw DomainError("water_film_depth: rain rate I must be >= 0");
  if (rain_rate_I == 0.0) return 0.0;
  return 6e-4 * std::pow(road.texture_depth_T, 0.09) *
         std::pow(road.drainage_length_L * rain_rate_I, 0.6) * std::pow(road.slope_S, -0.33);
}

}  // namespace rainsim
