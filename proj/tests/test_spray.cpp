#include <gtest/gtest.h>

#include <cmath>

#include "rainsim/lidar.hpp"
#include "rainsim/spray.hpp"
#include "test_util.hpp"

using namespace rainsim;
using rainsim::testing::rel_err;

namespace {

TireSpec tire(double K, double b, double hg, double hf) {
  return TireSpec{K, b, hg, hf};
}

WeatherConfig rain(double rate) {
  WeatherConfig w;
  w.rain_rate_mm_per_h = rate;
  return w;
}

Scene lone_vehicle_scene(double speed, double rain_rate) {
  VehicleState ego;
  ego.speed = speed;
  TrafficSpec t;
  t.count_min = t.count_max = 0;
  return Scene(rain(rain_rate), RoadSurface{}, t, ego, {}, RandomStream(derive_key(1, Stream::Scene)));
}

DropletCluster cluster_at(Vec3 p, Vec3 v = {}, double age = 0.0) {
  DropletCluster c;
  c.position = p;
  c.velocity = v;
  c.age = age;
  return c;
}

SprayParams drag_free() {
  SprayParams p;
  p.drag_cd = 0.0;
  return p;
}

// Flies one cluster for `duration` seconds at the given substep.
DropletCluster fly(DropletCluster c, double duration, double substep, const SprayParams& base,
                   double frame_dt = 0.1) {
  SprayParams p = base;
  p.substep_dt_s = substep;
  std::vector<DropletCluster> v{std::move(c)};
  const int frames = static_cast<int>(std::lround(duration / frame_dt));
  for (int i = 0; i < frames; ++i) integrate(v, WeatherConfig{}, frame_dt, p);
  return v[0];
}

struct SideVolumes {
  double left = 0.0;
  double right = 0.0;
};

// Wake update plus emission for one vehicle, counting emitted volume per side
// without keeping the clusters.
SideVolumes emitted_volume(const VehicleState& v, const WeatherConfig& w, const SprayParams& p,
                           double dt, int frames, std::uint64_t seed) {
  RandomStream wake(derive_key(seed, Stream::Wake));
  RandomStream em(derive_key(seed, Stream::Emission));
  EmissionState state = initial_emission_state(p, wake);
  std::uint64_t uid = 1;
  const double cv = droplet_volume(p.droplet_diameter) * p.cluster_size;
  SideVolumes out;
  for (int k = 0; k < frames; ++k) {
    state = wake_update(state, dt, p, wake);
    for (WheelSide side : {WheelSide::Left, WheelSide::Right}) {
      EmitContext ctx{&em, &uid};
      const auto n = emit(WheelState{v, side}, w, RoadSurface{}, p, state, dt, ctx).size();
      (side == WheelSide::Left ? out.left : out.right) += static_cast<double>(n) * cv;
    }
  }
  return out;
}

}  // namespace

// Reference values from an independent high-precision evaluation, frozen.
TEST(VolumeRates, TreadPickupReference) {
  struct Case {
    double K, b, v, hg, want;
  };
  const Case cases[] = {
      {0.3, 0.25, 27.77777777777778, 0.0035, 0.00729166666666666725},
      {0.3, 0.25, 25.0, 0.0035, 0.0065625},
      {0.5, 0.2, 22.2, 0.004, 0.00888},
      {0.1, 0.3, 30.0, 0.002, 0.0018},
      {0.9, 0.15, 10.0, 0.006, 0.0081},
  };
  for (const auto& c : cases) {
    EXPECT_LE(rel_err(volume_rate_tread_pickup(tire(c.K, c.b, c.hg, 0.0), c.v), c.want), 1e-12);
  }
  EXPECT_EQ(volume_rate_tread_pickup(tire(0.3, 0.25, 0.0035, 0.001), 0.0), 0.0);
  const TireSpec t = tire(0.3, 0.25, 0.0035, 0.001);
  EXPECT_EQ(volume_rate_tread_pickup(t, 50.0), 2.0 * volume_rate_tread_pickup(t, 25.0));
}

TEST(VolumeRates, SideWaveReference) {
  struct Case {
    double K, b, v, wd, hg, hf, want;
  };
  const Case cases[] = {
      {0.3, 0.25, 25.0, 0.0349, 0.0035, 0.001, 0.10359375},
      {0.3, 0.25, 27.77777777777778, 0.05, 0.0035, 0.001, 0.16753472222222223562},
      {0.5, 0.2, 20.0, 0.01, 0.004, 0.002, 0.014},
      {0.1, 0.3, 30.0, 0.003, 0.002, 0.001, 0.00855},
      {0.9, 0.15, 10.0, 0.02, 0.006, 0.0, 0.01095},
      {0.3, 0.25, 25.0, 0.006, 0.0035, 0.001, 1.328125e-2},
  };
  for (const auto& c : cases) {
    EXPECT_LE(rel_err(volume_rate_side_wave(tire(c.K, c.b, c.hg, c.hf), c.v, c.wd), c.want), 1e-12)
        << c.wd;
  }
}

TEST(VolumeRates, SideWaveClampsAtZero) {
  const TireSpec t = tire(0.3, 0.25, 0.0035, 0.001);
  EXPECT_EQ(volume_rate_side_wave(t, 25.0, 0.001), 0.0);
  const double threshold = 0.3 * 0.0035 + 0.7 * 0.001;
  EXPECT_NEAR(volume_rate_side_wave(t, 25.0, threshold), 0.0, 1e-18);
  for (double wd = 0.0; wd < 0.01; wd += 1e-4) EXPECT_GE(volume_rate_side_wave(t, 25.0, wd), 0.0);
}

TEST(Emission, ClusterCountForWorkedExample) {
  const SprayParams p;
  EXPECT_NEAR(droplet_volume(1e-3), 5.2359877559829887e-10, 1e-24);
  double carry = 0.0;
  EXPECT_EQ(clusters_for_volume(6.5625e-3 * 0.01, p, carry), 12533);
  EXPECT_GE(carry, 0.0);
  EXPECT_LT(carry, 1.0);
}

TEST(Emission, FullPathMatchesWorkedExampleWithoutBudget) {
  SprayParams p;
  p.emission_scale = 1.0;
  p.max_clusters_per_wheel_per_frame = 0;
  p.wake_asymmetry_a = 0.0;
  VehicleState v;
  v.speed = 25.0;
  EmissionState state;
  state.weight = 1.0;
  RandomStream rng(derive_key(1, Stream::Emission));
  std::uint64_t uid = 1;
  EmitContext ctx{&rng, &uid};
  // Rain 30 on the default road stands deeper than the groove, so the full
  // groove depth is picked up.
  const auto out = emit(WheelState{v, WheelSide::Left}, rain(30.0), RoadSurface{}, p, state, 0.01, ctx);
  std::size_t tp = 0;
  for (const auto& c : out) tp += c.mechanism == SprayMechanism::TreadPickup;
  EXPECT_EQ(tp, 12533u);
  EXPECT_EQ(ctx.suppressed_by_cap, 0);
}

TEST(Emission, StationaryVehicleEmitsNothing) {
  const SprayParams p;
  VehicleState v;
  v.speed = 0.0;
  EmissionState state;
  RandomStream rng(derive_key(1, Stream::Emission));
  std::uint64_t uid = 1;
  EmitContext ctx{&rng, &uid};
  EXPECT_TRUE(emit(WheelState{v, WheelSide::Left}, rain(60.0), RoadSurface{}, p, state, 0.1, ctx).empty());
}

TEST(Emission, CapSplitsProportionally) {
  SprayParams p;
  p.emission_scale = 1.0;
  VehicleState v;
  v.speed = 25.0;
  EmissionState state;
  RandomStream rng(derive_key(2, Stream::Emission));
  std::uint64_t uid = 1;
  EmitContext ctx{&rng, &uid};
  const auto out = emit(WheelState{v, WheelSide::Right}, rain(30.0), RoadSurface{}, p, state, 0.1, ctx);
  EXPECT_EQ(out.size(), 300u);
  EXPECT_GT(ctx.suppressed_by_cap, 0);
  std::size_t tp = 0;
  for (const auto& c : out) tp += c.mechanism == SprayMechanism::TreadPickup;
  // Tread pickup is VR_TP / (VR_TP + VR_SD) of the raw count at rain 30.
  const double wd = water_film_depth(RoadSurface{}, 30.0);
  const double tp_share = volume_rate_tread_pickup(v.tire, 25.0) /
                          (volume_rate_tread_pickup(v.tire, 25.0) + volume_rate_side_wave(v.tire, 25.0, wd));
  EXPECT_NEAR(static_cast<double>(tp) / 300.0, tp_share, 0.01);
}

TEST(Emission, SpawnedClusterGeometry) {
  SprayParams p;
  p.emission_scale = 1e-3;
  VehicleState v;
  v.speed = 25.0;
  v.pose.yaw = 0.3;
  EmissionState state;
  state.wake_sign = -1;
  RandomStream rng(derive_key(3, Stream::Emission));
  std::uint64_t uid = 100;
  EmitContext ctx{&rng, &uid};
  const auto out = emit(WheelState{v, WheelSide::Left}, rain(45.0), RoadSurface{}, p, state, 0.1, ctx);
  ASSERT_FALSE(out.empty());
  const Vec3 lateral_dir{-std::sin(0.3), std::cos(0.3), 0.0};
  std::uint64_t expected_uid = 100;
  for (const auto& c : out) {
    EXPECT_EQ(c.uid, expected_uid++);
    EXPECT_EQ(c.offsets.size(), 9u);
    for (const auto& o : c.offsets) EXPECT_LE(o.norm(), p.cluster_radius);
    EXPECT_GE(c.pending_substeps, 0);
    EXPECT_LT(c.pending_substeps, 10);
    EXPECT_NEAR(c.lateral_velocity.norm(), p.lateral_speed_init, 1e-12);
    EXPECT_NEAR(c.lateral_velocity.dot(lateral_dir), -p.lateral_speed_init, 1e-12);
    const Vec3 rel = c.velocity - v.velocity();
    const double expected_speed =
        c.mechanism == SprayMechanism::TreadPickup ? v.speed : p.side_wave_speed_fraction * v.speed;
    EXPECT_NEAR(rel.norm(), expected_speed, 1e-9);
    EXPECT_GT(rel.z, -1e-12);  // elevation angles are non-negative
    EXPECT_GT(c.position.z, 0.0);
  }
  EXPECT_EQ(uid, expected_uid);
}

TEST(Emission, CountNonDecreasingInSpeedAndWater) {
  SprayParams p;
  p.emission_scale = 1e-3;
  p.max_clusters_per_wheel_per_frame = 0;
  auto count = [&](double speed, double rate) {
    VehicleState v;
    v.speed = speed;
    EmissionState state;
    RandomStream rng(derive_key(4, Stream::Emission));
    std::uint64_t uid = 1;
    EmitContext ctx{&rng, &uid};
    return emit(WheelState{v, WheelSide::Left}, rain(rate), RoadSurface{}, p, state, 0.1, ctx).size();
  };
  std::size_t prev = 0;
  for (double s = 5.0; s <= 40.0; s += 2.5) {
    const auto n = count(s, 45.0);
    EXPECT_GE(n, prev);
    prev = n;
  }
  prev = 0;
  for (double r = 1.0; r <= 100.0; r += 9.0) {
    const auto n = count(25.0, r);
    EXPECT_GE(n, prev);
    prev = n;
  }
}

TEST(Emission, MeanVolumeMatchesRateOverManyFrames) {
  SprayParams p;
  p.emission_scale = 1e-5;
  p.max_clusters_per_wheel_per_frame = 0;
  VehicleState v;
  v.speed = 25.0;
  const WeatherConfig w = rain(45.0);
  const double dt = 0.1;
  const int frames = 10000;
  const SideVolumes vol = emitted_volume(v, w, p, dt, frames, 21);
  const double wd = water_film_depth(RoadSurface{}, 45.0);
  TireSpec groove = v.tire;
  groove.groove_depth_h_groove = std::min(groove.groove_depth_h_groove, wd);
  const double vr = volume_rate_tread_pickup(groove, v.speed) + volume_rate_side_wave(v.tire, v.speed, wd);
  const double expected = 2.0 * p.emission_scale * vr * dt * frames;
  EXPECT_NEAR((vol.left + vol.right) / expected, 1.0, 0.05);
}

TEST(Wake, MultipliersSumToTwoAndSymmetricWithoutAsymmetry) {
  SprayParams p;
  RandomStream rng(derive_key(5, Stream::Wake));
  EmissionState s = initial_emission_state(p, rng);
  for (int i = 0; i < 1000; ++i) {
    s = wake_update(s, 0.1, p, rng);
    EXPECT_DOUBLE_EQ(s.multiplier(WheelSide::Left, 0.3) + s.multiplier(WheelSide::Right, 0.3), 2.0);
    EXPECT_EQ(s.multiplier(WheelSide::Left, 0.0), 1.0);
    EXPECT_EQ(s.multiplier(WheelSide::Right, 0.0), 1.0);
    EXPECT_GE(s.weight, 0.5);
    EXPECT_LE(s.weight, 1.5);
  }
}

TEST(Wake, LongRunLeftMultiplierAveragesToOne) {
  SprayParams p;
  RandomStream rng(derive_key(6, Stream::Wake));
  EmissionState s = initial_emission_state(p, rng);
  const double dt = 0.1;
  const int steps = 50000;  // 5000 s
  double sum = 0.0;
  int flips = 0;
  for (int i = 0; i < steps; ++i) {
    const int before = s.wake_sign;
    s = wake_update(s, dt, p, rng);
    flips += s.wake_sign != before;
    sum += s.multiplier(WheelSide::Left, p.wake_asymmetry_a);
  }
  EXPECT_NEAR(sum / steps, 1.0, 0.03);
  // Holding times have mean 1 s; steps of 0.1 s can hide a few double flips.
  EXPECT_NEAR(flips / 5000.0, 1.0, 0.1);
}

TEST(Wake, LeftRightVolumeSymmetricOverLongHorizon) {
  SprayParams p;
  p.emission_scale = 2e-6;
  p.max_clusters_per_wheel_per_frame = 0;
  VehicleState v;
  v.speed = 27.78;
  const SideVolumes vol = emitted_volume(v, rain(45.0), p, 0.1, 50000, 33);
  ASSERT_GT(vol.left, 0.0);
  EXPECT_LT(std::abs(vol.left - vol.right) / (0.5 * (vol.left + vol.right)), 0.05);
}

TEST(Integrate, BallisticClosedForm) {
  const DropletCluster c = fly(cluster_at({0, 0, 0}, {5, 0, 2}), 0.4, 0.01, drag_free());
  // x = v0x t, z = v0z t - g t^2 / 2
  EXPECT_NEAR(c.position.x, 2.0, 1e-4);
  EXPECT_NEAR(c.position.y, 0.0, 1e-4);
  EXPECT_NEAR(c.position.z, 0.8 - 0.5 * 9.81 * 0.16, 1e-4);
  EXPECT_NEAR(c.position.z, 0.0152, 1e-4);
  EXPECT_NEAR(c.velocity.z, 2.0 - 9.81 * 0.4, 1e-9);
  EXPECT_NEAR(c.age, 0.4, 1e-12);
}

TEST(Integrate, FreeFallKeepsHorizontalPosition) {
  const DropletCluster c = fly(cluster_at({3, -2, 5}), 0.5, 0.01, drag_free());
  EXPECT_EQ(c.position.x, 3.0);
  EXPECT_EQ(c.position.y, -2.0);
  EXPECT_NEAR(c.position.z, 5.0 - 0.5 * 9.81 * 0.25, 1e-9);
}

TEST(Integrate, HalvingSubstepHalvesDragError) {
  const SprayParams p;  // quadratic drag, Cd 0.47
  const DropletCluster start = cluster_at({0, 0, 0.5}, {-20, 3, 6});
  const DropletCluster ref = fly(start, 0.4, 1e-5, p);
  const double e1 = (fly(start, 0.4, 0.01, p).position - ref.position).norm();
  const double e2 = (fly(start, 0.4, 0.005, p).position - ref.position).norm();
  ASSERT_GT(e2, 0.0);
  EXPECT_GE(e1 / e2, 1.5);
  EXPECT_LE(e1 / e2, 2.5);
}

TEST(Integrate, DragPullsTowardsWind) {
  SprayParams p;
  p.gravity = 0.0;
  WeatherConfig w;
  w.wind_velocity = {0.0, 8.0, 0.0};
  std::vector<DropletCluster> v{cluster_at({0, 0, 1}, {0, 0, 0})};
  for (int i = 0; i < 50; ++i) integrate(v, w, 0.1, p);
  EXPECT_GT(v[0].velocity.y, 7.0);
  EXPECT_LT(v[0].velocity.y, 8.0);
}

TEST(Integrate, LateralVelocityDecaysByEOverTau) {
  SprayParams p = drag_free();
  p.gravity = 0.0;
  DropletCluster c = cluster_at({0, 0, 1});
  c.lateral_velocity = {0.0, 1.5, 0.0};
  const DropletCluster after = fly(c, p.lateral_decay_tau_s, 0.01, p, 0.05);
  EXPECT_NEAR(after.lateral_velocity.norm() / (1.5 / std::exp(1.0)), 1.0, 0.02);
  // Displacement is the integral of the decaying velocity, to first order in h.
  const double tau = p.lateral_decay_tau_s;
  EXPECT_NEAR(after.position.y, 1.5 * tau * (1.0 - std::exp(-1.0)), 0.02);
}

TEST(Integrate, PendingClustersWaitThenMove) {
  SprayParams p = drag_free();
  DropletCluster c = cluster_at({0, 0, 10}, {10, 0, 0});
  c.pending_substeps = 4;
  std::vector<DropletCluster> v{c};
  integrate(v, WeatherConfig{}, 0.1, p);
  EXPECT_EQ(v[0].pending_substeps, 0);
  EXPECT_NEAR(v[0].position.x, 10.0 * 0.06, 1e-12);
  EXPECT_NEAR(v[0].age, 0.06, 1e-12);
}

TEST(Annihilate, ReasonExamples) {
  const Scene scene = lone_vehicle_scene(25.0, 30.0);
  const Vec3 origin = lidar_origin(scene.ego(), LidarModel{});
  const SprayParams p;
  EXPECT_EQ(annihilation_reason(cluster_at({10, 0, -0.01}), scene, origin, p), AnnihilationReason::Collision);
  EXPECT_EQ(annihilation_reason(cluster_at({origin.x + 75.01, origin.y, origin.z}, {}, 0.1), scene, origin, p),
            AnnihilationReason::Range);
  EXPECT_EQ(annihilation_reason(cluster_at({10, 0, 1}, {}, 1.51), scene, origin, p), AnnihilationReason::Age);
  EXPECT_EQ(annihilation_reason(cluster_at({1.0, 0.2, 0.7}), scene, origin, p), AnnihilationReason::Collision);
  EXPECT_EQ(annihilation_reason(cluster_at({10, 0, 1}, {}, 1.5), scene, origin, p), std::nullopt);
  // Ground contact wins over age.
  EXPECT_EQ(annihilation_reason(cluster_at({10, 0, 0}, {}, 3.0), scene, origin, p), AnnihilationReason::Collision);
  // Range wins over age.
  EXPECT_EQ(annihilation_reason(cluster_at({100, 0, 2}, {}, 3.0), scene, origin, p), AnnihilationReason::Range);

  std::vector<DropletCluster> v{cluster_at({10, 0, -0.01}), cluster_at({origin.x + 75.01, 0, 2}),
                                cluster_at({10, 0, 1}, {}, 1.51), cluster_at({10, 0, 1})};
  const AnnihilationCounts n = annihilate(v, scene, origin, p);
  EXPECT_EQ(n.collision, 1u);
  EXPECT_EQ(n.range, 1u);
  EXPECT_EQ(n.age, 1u);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].position.x, 10.0);
}

TEST(SpraySystem, ConservationAndPredicatesEveryFrame) {
  Scene scene = build_scenario(rainsim::testing::small_rain_config(1, 3));
  SpraySystem sys(SprayParams{}, 3);
  const double dt = 0.1;
  for (int k = 0; k < 120; ++k) {
    sys.emit_frame(scene, dt);
    scene = step(scene, dt);
    sys.integrate_frame(scene.weather(), dt);
    const Vec3 origin = lidar_origin(scene.ego(), LidarModel{});
    sys.annihilate_frame(scene, origin);
    const auto& c = sys.counters();
    ASSERT_EQ(c.emitted, sys.alive() + c.annihilated.total());
    for (const auto& cl : sys.clusters()) {
      ASSERT_FALSE(annihilation_reason(cl, scene, origin, sys.params()).has_value());
      ASSERT_GE(cl.age, 0.0);
      ASSERT_EQ(cl.pending_substeps, 0);
    }
    for (int id : {0, 1}) {
      const EmissionState* s = sys.emission_state(id);
      ASSERT_NE(s, nullptr);
      for (const auto& wheel : s->carry) {
        for (double carry : wheel) {
          ASSERT_GE(carry, 0.0);
          ASSERT_LT(carry, 1.0);
        }
      }
    }
  }
  EXPECT_GT(sys.alive(), 1000u);
  EXPECT_GT(sys.counters().annihilated.collision, 0u);
  EXPECT_GT(sys.counters().annihilated.age + sys.counters().annihilated.range, 0u);
}

TEST(SpraySystem, SameSeedSameTrajectories) {
  auto run = [](std::uint64_t seed) {
    Scene scene = build_scenario(rainsim::testing::small_rain_config(1, 3));
    SpraySystem sys(SprayParams{}, seed);
    for (int k = 0; k < 20; ++k) {
      sys.emit_frame(scene, 0.1);
      scene = step(scene, 0.1);
      sys.integrate_frame(scene.weather(), 0.1);
      sys.annihilate_frame(scene, lidar_origin(scene.ego(), LidarModel{}));
    }
    return sys.clusters();
  };
  const auto a = run(9), b = run(9), c = run(10);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].uid, b[i].uid);
    ASSERT_EQ(a[i].position, b[i].position);
    ASSERT_EQ(a[i].velocity, b[i].velocity);
    ASSERT_EQ(a[i].offsets, b[i].offsets);
  }
  bool differs = a.size() != c.size();
  for (std::size_t i = 0; !differs && i < a.size(); ++i) differs = !(a[i].position == c[i].position);
  EXPECT_TRUE(differs);
}

TEST(SpraySystem, DefaultBudgetTrailsAWellDefinedCloud) {
  Scene scene = lone_vehicle_scene(100.0 / 3.6, 45.0);
  SpraySystem sys(SprayParams{}, 12);
  for (int k = 0; k < 40; ++k) {
    sys.emit_frame(scene, 0.1);
    scene = step(scene, 0.1);
    sys.integrate_frame(scene.weather(), 0.1);
    sys.annihilate_frame(scene, lidar_origin(scene.ego(), LidarModel{}));
  }
  EXPECT_GE(sys.alive(), 1800u);
  EXPECT_LE(sys.alive(), 6000u);
}
