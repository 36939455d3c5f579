#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "rainsim/rng.hpp"
#include "rainsim/vec3.hpp"

namespace rainsim {

// Segment-level weather categories used as the discrete weather input of
// the range rasters.
enum class WeatherClass : std::uint8_t { Clear = 0, WetGround = 1, LightRain = 2, HeavyRain = 3 };

std::string_view to_string(WeatherClass c);
std::optional<WeatherClass> weather_class_from_string(std::string_view s);

// Semantic ids as stored in .cls sidecars and raster semantic planes.
enum class SemanticClass : std::uint8_t { None = 0, Ground = 1, Vehicle = 2, Spray = 3 };

std::string_view to_string(SemanticClass c);

struct WeatherConfig {
  double rain_rate_mm_per_h = 0.0;
  WeatherClass weather_class = WeatherClass::Clear;
  Vec3 wind_velocity{};
  // One-way extinction coefficient, 1/m.
  double attenuation_alpha_per_m = 0.0;
};

// Default rain-rate to extinction mapping, alpha = 0.01 * (I / 10)^0.6 per metre.
double default_attenuation_alpha(double rain_rate_mm_per_h);

struct Extent2 {
  double x_min = -1.0e5;
  double x_max = 1.0e5;
  double y_min = -100.0;
  double y_max = 100.0;

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

// Flat road plane at z = 0. T, L and S feed the empirical water-film fit and
// are treated as dimensionless config scalars.
struct RoadSurface {
  double texture_depth_T = 0.8;
  double drainage_length_L = 3.5;
  double slope_S = 0.02;
  Extent2 extent{};
  Vec3 albedo_rgb{0.25, 0.25, 0.25};
};

struct TireSpec {
  double groove_width_fraction_K = 0.3;
  double contact_width_b = 0.25;       // m
  double groove_depth_h_groove = 0.0035;  // m
  double film_depth_h_film = 0.001;       // m
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;  // ground contact height of the box bottom
  double yaw = 0.0;

  bool operator==(const Pose&) const = default;
};

struct BoxSize {
  double length = 4.6;
  double width = 1.9;
  double height = 1.5;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

enum class WheelSide : std::uint8_t { Left = 0, Right = 1 };

struct VehicleState {
  int id = 0;
  Pose pose{};
  double speed = 0.0;  // m/s
  BoxSize box{};
  TireSpec tire{};
  // Body-frame (x forward, y left) positions of the left and right rear wheels.
  std::array<Vec2, 2> rear_wheel_offsets{Vec2{-1.4, 0.8}, Vec2{-1.4, -0.8}};
  Vec3 albedo_rgb{0.5, 0.5, 0.5};
  SemanticClass semantic_class = SemanticClass::Vehicle;
  bool emits_spray = true;

  Vec3 heading() const;
  Vec3 velocity() const { return heading() * speed; }
  Vec3 box_center() const { return {pose.x, pose.y, pose.z + 0.5 * box.height}; }
  // Body-frame point (x, y, z above pose.z) to world.
  Vec3 to_world(const Vec3& body) const;
  Vec3 to_body(const Vec3& world) const;
  // Closed box test with an optional outward margin.
  bool contains(const Vec3& world, double margin = 0.0) const;
};

// Body geometry shared by traffic vehicles.
struct VehicleTemplate {
  BoxSize box{};
  TireSpec tire{};
  std::array<Vec2, 2> rear_wheel_offsets{Vec2{-1.4, 0.8}, Vec2{-1.4, -0.8}};
};

struct EgoSpec {
  double speed = 25.0;  // m/s
  double lane_y = 0.0;
  VehicleTemplate body{};
  Vec3 albedo_rgb{0.6, 0.6, 0.6};
  bool emits_spray = true;
};

// A traffic vehicle placed explicitly at frame 0 instead of being sampled.
struct PlacedVehicle {
  double offset_x = 20.0;  // relative to the ego, along +X
  double lane_y = 0.0;
  double speed = 25.0;  // m/s
  std::optional<Vec3> albedo_rgb;
};

struct TrafficSpec {
  int count_min = 1;
  int count_max = 6;
  double speed_min = 80.0 / 3.6;  // m/s
  double speed_max = 100.0 / 3.6;
  std::vector<double> lane_offsets_y{-3.5, 0.0, 3.5};
  double corridor_ahead_m = 60.0;
  double corridor_behind_m = 40.0;
  double min_gap_m = 8.0;
  VehicleTemplate body{};
  std::vector<PlacedVehicle> placed;
};

// World state: ego plus surrounding traffic on a straight highway along +X.
// A value type; copies are independent snapshots.
class Scene {
 public:
  Scene(WeatherConfig weather, RoadSurface road, TrafficSpec traffic, VehicleState ego,
        std::vector<VehicleState> others, RandomStream rng, double time = 0.0);

  double time() const { return time_; }
  const WeatherConfig& weather() const { return weather_; }
  const RoadSurface& road() const { return road_; }
  const TrafficSpec& traffic_spec() const { return traffic_spec_; }
  const VehicleState& ego() const { return ego_; }
  const std::vector<VehicleState>& traffic() const { return traffic_; }
  // Ego first, then traffic in id order.
  std::vector<const VehicleState*> vehicles() const;
  const VehicleState* find_vehicle(int id) const;
  std::uint64_t respawn_count() const { return respawns_; }

  friend Scene step(Scene scene, double dt);

 private:
  void respawn(VehicleState& v);

  WeatherConfig weather_;
  RoadSurface road_;
  TrafficSpec traffic_spec_;
  VehicleState ego_;
  std::vector<VehicleState> traffic_;
  RandomStream rng_;
  double time_ = 0.0;
  std::uint64_t respawns_ = 0;
};

// Samples (or places, when `spec.placed` is non-empty) the frame-0 traffic
// around `ego`. Ids start at ego.id + 1.
std::vector<VehicleState> spawn_traffic(const TrafficSpec& spec, const VehicleState& ego,
                                        RandomStream& rng);

// Advances every vehicle by straight-lane kinematics. Vehicles that leave the
// corridor around the ego re-enter from the opposite corridor edge with a
// freshly sampled lane and speed. dt must be > 0.
Scene step(Scene scene, double dt);

// Empirical standing water film thickness:
//   WD = 6e-4 * T^0.09 * (L * I)^0.6 * S^-0.33
// Throws DomainError when S <= 0, L <= 0, T < 0 or I < 0.
double water_film_depth(const RoadSurface& road, double rain_rate_I);

}  // namespace rainsim
