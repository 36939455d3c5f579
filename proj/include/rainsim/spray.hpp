#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <numbers>
#include <vector>

#include "rainsim/rng.hpp"
#include "rainsim/scene.hpp"
#include "rainsim/vec3.hpp"

namespace rainsim {

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

enum class SprayMechanism : std::uint8_t { TreadPickup = 0, SideWave = 1 };

struct AngleRange {
  double lo = 0.0;  // radians
  double hi = 0.0;
};

// Emission directions use two angles in the emitting vehicle's body frame:
//   n: horizontal angle of the velocity measured from -X (rearward), positive
//      towards the wheel's outer side;
//   l: elevation of the velocity above the horizontal plane.
// The relative direction is (-cos l cos n, side * cos l sin n, sin l).
struct SprayParams {
  double droplet_diameter = 1e-3;  // m
  int cluster_size = 10;
  double cluster_radius = 5e-3;  // m

  double weight_interval_s = 0.1;
  double weight_min = 0.5;
  double weight_max = 1.5;

  AngleRange tread_pickup_n{deg_to_rad(-30.0), deg_to_rad(30.0)};
  AngleRange tread_pickup_l{deg_to_rad(10.0), deg_to_rad(60.0)};
  AngleRange side_wave_n{deg_to_rad(75.0), deg_to_rad(105.0)};
  AngleRange side_wave_l{deg_to_rad(0.0), deg_to_rad(20.0)};
  // Side-wave ejection speed relative to the vehicle, as a fraction of v.
  double side_wave_speed_fraction = 0.5;

  double lateral_speed_init = 1.5;  // m/s
  double lateral_decay_tau_s = 0.5;
  double wake_asymmetry_a = 0.3;
  double wake_flip_mean_s = 1.0;

  double max_age_s = 1.5;
  double max_range_m = 75.0;

  double substep_dt_s = 0.01;
  double drag_cd = 0.47;
  double air_density = 1.225;     // kg/m^3
  double water_density = 1000.0;  // kg/m^3
  double gravity = 9.81;          // m/s^2

  // Budget controls. Non-positive cap disables the cap.
  int max_clusters_per_wheel_per_frame = 300;
  double emission_scale = 2.0e-4;

  // Spawn geometry (body frame heights above the road, clearance outside the box).
  double tread_pickup_height_m = 0.45;
  double side_wave_height_m = 0.05;
  double spawn_clearance_m = 0.05;
};

// Volume of one spherical droplet, (pi / 6) d^3.
double droplet_volume(double diameter);

struct DropletCluster {
  std::uint64_t uid = 0;
  Vec3 position{};  // central droplet, world frame
  Vec3 velocity{};
  Vec3 lateral_velocity{};  // wake-induced, decays separately
  double age = 0.0;
  // Substeps to wait before the cluster starts moving; spreads births across
  // the frame interval. Zero for every cluster once integrate() has run.
  int pending_substeps = 0;
  std::vector<Vec3> offsets;  // cluster_size - 1 rigid offsets of the satellites
  int vehicle_id = 0;
  WheelSide side = WheelSide::Left;
  SprayMechanism mechanism = SprayMechanism::TreadPickup;
};

// Per-vehicle emission state: water-volume weight w(t), bi-stable wake side and
// the fractional cluster carry-over per wheel and mechanism.
struct EmissionState {
  std::array<std::array<double, 2>, 2> carry{};  // [wheel][mechanism], in [0, 1)
  double weight = 1.0;
  double time_to_weight_change = 0.0;
  int wake_sign = 1;  // +1: wake swings to the left (+Y body)
  double time_to_flip = 0.0;

  // (1 + a, 1 - a) for (left, right) when wake_sign = +1, mirrored otherwise.
  double multiplier(WheelSide side, double a) const {
    const double s = side == WheelSide::Left ? 1.0 : -1.0;
    return 1.0 + a * s * wake_sign;
  }
};

EmissionState initial_emission_state(const SprayParams& params, RandomStream& rng);

// Advances w(t) and the wake side by dt. w is resampled uniformly from
// [weight_min, weight_max] every weight_interval_s; the wake side flips after
// exponentially distributed holding times with mean wake_flip_mean_s.
EmissionState wake_update(EmissionState state, double dt, const SprayParams& params,
                          RandomStream& rng);

// Tread pickup volume rate K * b * v * h_groove (m^3/s).
double volume_rate_tread_pickup(const TireSpec& tire, double v);

// Side wave volume rate 0.5 * b * v * (WD - K h_groove - (1 - K) h_film),
// clamped at zero.
double volume_rate_side_wave(const TireSpec& tire, double v, double water_depth);

// Clusters for a volume, accumulating the fractional remainder in `carry`.
std::int64_t clusters_for_volume(double volume, const SprayParams& params, double& carry);

struct WheelState {
  VehicleState vehicle;
  WheelSide side = WheelSide::Left;
};

// Inputs to emit() that are not physics: the draw stream, the uid counter and
// the number of substeps the emission interval is divided into.
struct EmitContext {
  RandomStream* rng = nullptr;
  std::uint64_t* next_uid = nullptr;
  std::int64_t suppressed_by_cap = 0;  // output: clusters dropped by the cap
};

// Emits the clusters shed by one rear wheel over (t, t + dt], with `wheel`
// holding the vehicle pose at time t. Tread pickup uses the groove water
// min(h_groove, WD); grooves cannot carry more water than stands on the road.
std::vector<DropletCluster> emit(const WheelState& wheel, const WeatherConfig& weather,
                                 const RoadSurface& road, const SprayParams& params,
                                 EmissionState& state, double dt, EmitContext& ctx);

// Moves every cluster forward by dt_frame using substeps of substep_dt_s:
//   a = g + k |w - v| (w - v),  k = rho_air Cd A / (2 m)
//   v' = v + a h
//   p' = p + (v + v') h / 2 + l' h,   l' = l exp(-h / tau)
// Constant accelerations are integrated exactly; drag is first order in h.
void integrate(std::vector<DropletCluster>& clusters, const WeatherConfig& weather,
               double dt_frame, const SprayParams& params);

enum class AnnihilationReason : std::uint8_t { Collision = 0, Range = 1, Age = 2 };

struct AnnihilationCounts {
  std::uint64_t collision = 0;
  std::uint64_t range = 0;
  std::uint64_t age = 0;

  std::uint64_t total() const { return collision + range + age; }
  AnnihilationCounts& operator+=(const AnnihilationCounts& o) {
    collision += o.collision;
    range += o.range;
    age += o.age;
    return *this;
  }
};

// First matching reason in the order collision, range, age; nullopt if alive.
std::optional<AnnihilationReason> annihilation_reason(const DropletCluster& c,
                                                      const Scene& scene,
                                                      const Vec3& lidar_origin,
                                                      const SprayParams& params);

// Removes clusters that touch the ground (z <= 0) or any vehicle box, lie
// farther than max_range_m from the lidar, or are older than max_age_s.
AnnihilationCounts annihilate(std::vector<DropletCluster>& clusters, const Scene& scene,
                              const Vec3& lidar_origin, const SprayParams& params);

struct SprayCounters {
  std::uint64_t emitted = 0;
  AnnihilationCounts annihilated{};
  std::uint64_t suppressed_by_cap = 0;
  double emitted_volume_left = 0.0;  // m^3, summed over all vehicles
  double emitted_volume_right = 0.0;
};

// Per-frame bookkeeping around the free functions above: one EmissionState
// and one pair of draw streams per vehicle id, plus running counters.
class SpraySystem {
 public:
  SpraySystem(SprayParams params, std::uint64_t seed);

  const SprayParams& params() const { return params_; }
  const std::vector<DropletCluster>& clusters() const { return clusters_; }
  const SprayCounters& counters() const { return counters_; }
  std::size_t alive() const { return clusters_.size(); }
  const EmissionState* emission_state(int vehicle_id) const;

  // Wake update plus emission for every emitting vehicle over (t, t + dt];
  // `scene` is the state at time t. Returns the number of new clusters.
  std::size_t emit_frame(const Scene& scene, double dt);
  void integrate_frame(const WeatherConfig& weather, double dt);
  AnnihilationCounts annihilate_frame(const Scene& scene, const Vec3& lidar_origin);

 private:
  struct VehicleStreams {
    EmissionState state;
    RandomStream wake;
    RandomStream emission;
  };

  VehicleStreams& streams_for(int vehicle_id);

  SprayParams params_;
  std::uint64_t seed_;
  std::uint64_t next_uid_ = 1;
  std::map<int, VehicleStreams> vehicles_;
  std::vector<DropletCluster> clusters_;
  SprayCounters counters_;
};

}  // namespace rainsim
