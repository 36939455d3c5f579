#include "rainsim/scenario.hpp"

#include <cmath>
#include <string>

#include "rainsim/error.hpp"

namespace rainsim {

namespace {

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

bool finite(double v) { return std::isfinite(v); }

void check_positive(double v, const std::string& field) {
  require(finite(v) && v > 0.0, field, "must be > 0");
}

void check_non_negative(double v, const std::string& field) {
  require(finite(v) && v >= 0.0, field, "must be >= 0");
}

void check_unit_rgb(const Vec3& c, const std::string& field) {
  for (double v : {c.x, c.y, c.z}) {
    require(finite(v) && v >= 0.0 && v <= 1.0, field, "components must be in [0, 1]");
  }
}

void check_range(const AngleRange& r, const std::string& field) {
  require(finite(r.lo) && finite(r.hi) && r.lo <= r.hi, field, "needs lo <= hi");
}

void check_tire(const TireSpec& t, const std::string& prefix) {
  require(t.groove_width_fraction_K > 0.0 && t.groove_width_fraction_K < 1.0,
          prefix + ".groove_width_fraction_K", "must be in (0, 1)");
  check_positive(t.contact_width_b, prefix + ".contact_width_b");
  check_positive(t.groove_depth_h_groove, prefix + ".groove_depth_h_groove");
  check_non_negative(t.film_depth_h_film, prefix + ".film_depth_h_film");
  require(t.film_depth_h_film <= t.groove_depth_h_groove, prefix + ".film_depth_h_film",
          "must not exceed groove_depth_h_groove");
}

void check_body(const VehicleTemplate& body, const std::string& prefix) {
  check_positive(body.box.length, prefix + ".box.length");
  check_positive(body.box.width, prefix + ".box.width");
  check_positive(body.box.height, prefix + ".box.height");
  check_tire(body.tire, prefix + ".tire");
  for (const auto& w : body.rear_wheel_offsets) {
    require(std::abs(w.x) <= 0.5 * body.box.length && std::abs(w.y) <= 0.5 * body.box.width,
            prefix + ".rear_wheel_offsets", "wheels must lie inside the box footprint");
  }
}

}  // namespace

WeatherClass classify_rain_rate(double rain_rate_mm_per_h) {
  if (rain_rate_mm_per_h <= 0.0) return WeatherClass::Clear;
  if (rain_rate_mm_per_h < 0.5) return WeatherClass::WetGround;
  if (rain_rate_mm_per_h < 7.6) return WeatherClass::LightRain;
  return WeatherClass::HeavyRain;
}

void validate(const ScenarioConfig& c) {
  const auto& w = c.weather;
  check_non_negative(w.rain_rate_mm_per_h, "weather.rain_rate_mm_per_h");
  if (w.rain_rate_range_mm_per_h) {
    const auto& r = *w.rain_rate_range_mm_per_h;
    require(finite(r[0]) && finite(r[1]) && r[0] >= 0.0 && r[0] <= r[1],
            "weather.rain_rate_range_mm_per_h", "needs 0 <= lo <= hi");
  }
  if (w.attenuation_alpha_per_m) {
    check_non_negative(*w.attenuation_alpha_per_m, "weather.attenuation_alpha_per_m");
  }
  require(finite(w.wind_velocity.x) && finite(w.wind_velocity.y) && finite(w.wind_velocity.z),
          "weather.wind_velocity", "must be finite");

  const auto& road = c.road;
  check_positive(road.slope_S, "road.slope_S");
  check_positive(road.drainage_length_L, "road.drainage_length_L");
  check_non_negative(road.texture_depth_T, "road.texture_depth_T");
  require(road.extent.x_min < road.extent.x_max && road.extent.y_min < road.extent.y_max,
          "road.extent", "must be a non-degenerate rectangle");
  check_unit_rgb(road.albedo_rgb, "road.albedo_rgb");

  check_non_negative(c.ego.speed, "ego.speed_kmh");
  if (c.ego_speed_range) {
    const auto& r = *c.ego_speed_range;
    require(r[0] >= 0.0 && r[0] <= r[1], "ego.speed_range_kmh", "needs 0 <= lo <= hi");
  }
  check_body(c.ego.body, "ego.body");
  check_unit_rgb(c.ego.albedo_rgb, "ego.albedo_rgb");

  const auto& t = c.traffic;
  require(t.count_min >= 0 && t.count_min <= t.count_max, "traffic.count_range",
          "needs 0 <= min <= max");
  require(t.speed_min >= 0.0 && t.speed_min <= t.speed_max, "traffic.speed_range_kmh",
          "needs 0 <= min <= max");
  require(!t.lane_offsets_y.empty(), "traffic.lane_offsets_y", "must not be empty");
  check_positive(t.corridor_ahead_m, "traffic.corridor_ahead_m");
  check_positive(t.corridor_behind_m, "traffic.corridor_behind_m");
  check_non_negative(t.min_gap_m, "traffic.min_gap_m");
  check_body(t.body, "traffic.body");
  for (std::size_t i = 0; i < t.placed.size(); ++i) {
    const std::string p = "traffic.placed[" + std::to_string(i) + "]";
    check_non_negative(t.placed[i].speed, p + ".speed_kmh");
    if (t.placed[i].albedo_rgb) check_unit_rgb(*t.placed[i].albedo_rgb, p + ".albedo_rgb");
  }

  check_positive(c.frame_rate_hz, "frame_rate_hz");
  require(c.duration_frames >= 1, "duration_frames", "must be >= 1");

  const auto& l = c.lidar;
  require(l.channels >= 1, "lidar.channels", "must be >= 1");
  check_positive(l.points_per_second, "lidar.points_per_second");
  check_positive(l.rotation_hz, "lidar.rotation_hz");
  require(l.vfov_lower_deg < l.vfov_upper_deg && l.vfov_lower_deg >= -90.0 &&
              l.vfov_upper_deg <= 90.0,
          "lidar.vfov_deg", "needs -90 <= lower < upper <= 90");
  require(l.azimuth_steps() >= 1, "lidar.points_per_second",
          "yields fewer than one azimuth step per channel");
  check_positive(l.max_range_m, "lidar.max_range_m");
  check_positive(l.mount_height_m, "lidar.mount_height_m");
  check_positive(l.beam_divergence_rad, "lidar.beam_divergence_rad");
  require(l.drop_probability >= 0.0 && l.drop_probability < 1.0, "lidar.drop_probability",
          "must be in [0, 1)");
  check_non_negative(l.intercept_gain_kappa, "lidar.intercept_gain_kappa");

  const auto& s = c.spray;
  check_positive(s.droplet_diameter, "spray.droplet_diameter");
  require(s.cluster_size >= 1, "spray.cluster_size", "must be >= 1");
  check_non_negative(s.cluster_radius, "spray.cluster_radius");
  check_positive(s.weight_interval_s, "spray.weight_interval_s");
  require(s.weight_min >= 0.5 && s.weight_min <= s.weight_max && s.weight_max <= 1.5,
          "spray.weight_range", "needs 0.5 <= min <= max <= 1.5");
  check_range(s.tread_pickup_n, "spray.tread_pickup_n_deg");
  check_range(s.tread_pickup_l, "spray.tread_pickup_l_deg");
  check_range(s.side_wave_n, "spray.side_wave_n_deg");
  check_range(s.side_wave_l, "spray.side_wave_l_deg");
  check_non_negative(s.side_wave_speed_fraction, "spray.side_wave_speed_fraction");
  check_non_negative(s.lateral_speed_init, "spray.lateral_speed_init");
  check_positive(s.lateral_decay_tau_s, "spray.lateral_decay_tau_s");
  require(s.wake_asymmetry_a >= 0.0 && s.wake_asymmetry_a < 1.0, "spray.wake_asymmetry_a",
          "must be in [0, 1)");
  check_positive(s.wake_flip_mean_s, "spray.wake_flip_mean_s");
  check_positive(s.max_age_s, "spray.max_age_s");
  check_positive(s.max_range_m, "spray.max_range_m");
  check_positive(s.substep_dt_s, "spray.substep_dt_s");
  require(s.substep_dt_s <= 1.0 / c.frame_rate_hz + 1e-12, "spray.substep_dt_s",
          "must not exceed the frame interval");
  check_non_negative(s.drag_cd, "spray.drag_cd");
  check_positive(s.air_density, "spray.air_density");
  check_positive(s.water_density, "spray.water_density");
  check_positive(s.gravity, "spray.gravity");
  check_non_negative(s.emission_scale, "spray.emission_scale");
  check_non_negative(s.tread_pickup_height_m, "spray.tread_pickup_height_m");
  check_non_negative(s.side_wave_height_m, "spray.side_wave_height_m");
  check_non_negative(s.spawn_clearance_m, "spray.spawn_clearance_m");

  const auto& in = c.intensity.settings;
  check_positive(in.echo.transmit_power_Pt, "intensity.echo.transmit_power_Pt");
  check_positive(in.echo.receiver_diameter_Drec, "intensity.echo.receiver_diameter_Drec");
  require(in.echo.system_efficiency_eta_sys > 0.0 && in.echo.system_efficiency_eta_sys <= 1.0,
          "intensity.echo.system_efficiency_eta_sys", "must be in (0, 1]");
  check_positive(in.echo.normalization_range_R0, "intensity.echo.normalization_range_R0");
  require(in.reflectance.ground > 0.0 && in.reflectance.ground <= 1.0,
          "intensity.reflectance.ground", "must be in (0, 1]");
  require(in.reflectance.vehicle > 0.0 && in.reflectance.vehicle <= 1.0,
          "intensity.reflectance.vehicle", "must be in (0, 1]");
  check_positive(in.spray.mean, "intensity.spray.mean");
  check_positive(in.spray.sigma, "intensity.spray.sigma");
  require(in.spray.clamp_lo >= 0.0 && in.spray.clamp_lo < in.spray.clamp_hi &&
              in.spray.clamp_hi <= 1.0,
          "intensity.spray.clamp", "needs 0 <= lo < hi <= 1");
  // Effective reflectance must stay positive for every albedo the scene uses.
  require(luminance(road.albedo_rgb) > 0.0, "road.albedo_rgb", "luminance must be > 0");
  require(luminance(c.ego.albedo_rgb) > 0.0, "ego.albedo_rgb", "luminance must be > 0");
  if (c.intensity.mode == IntensityMode::FromPredictor) {
    require(!c.intensity.predictor_dir.empty(), "intensity.predictor_dir",
            "required in predictor mode");
  }

  require(c.dataset.raster_width >= 1 && c.dataset.raster_width <= l.azimuth_steps(),
          "dataset.raster_width",
          "must be in [1, " + std::to_string(l.azimuth_steps()) + "]");
}

WeatherConfig resolve_weather(const WeatherSpec& spec, RandomStream& rng) {
  WeatherConfig w;
  w.rain_rate_mm_per_h = spec.rain_rate_mm_per_h;
  if (spec.rain_rate_range_mm_per_h) {
    const auto& r = *spec.rain_rate_range_mm_per_h;
    w.rain_rate_mm_per_h = r[0] == r[1] ? r[0] : rng.uniform(r[0], r[1]);
  }
  w.weather_class =
      spec.weather_class ? *spec.weather_class : classify_rain_rate(w.rain_rate_mm_per_h);
  w.wind_velocity = spec.wind_velocity;
  w.attenuation_alpha_per_m = spec.attenuation_alpha_per_m
                                  ? *spec.attenuation_alpha_per_m
                                  : default_attenuation_alpha(w.rain_rate_mm_per_h);
  return w;
}

Scene build_scenario(const ScenarioConfig& config) {
  validate(config);
  RandomStream rng(derive_key(config.rng_seed, Stream::Scene));
  const WeatherConfig weather = resolve_weather(config.weather, rng);

  VehicleState ego;
  ego.id = 0;
  ego.pose = {0.0, config.ego.lane_y, 0.0, 0.0};
  ego.speed = config.ego.speed;
  if (config.ego_speed_range) {
    const auto& r = *config.ego_speed_range;
    ego.speed = rng.uniform(r[0], r[1]);
  }
  ego.box = config.ego.body.box;
  ego.tire = config.ego.body.tire;
  ego.rear_wheel_offsets = config.ego.body.rear_wheel_offsets;
  ego.albedo_rgb = config.ego.albedo_rgb;
  ego.emits_spray = config.ego.emits_spray;

  auto traffic = spawn_traffic(config.traffic, ego, rng);
  return Scene(weather, config.road, config.traffic, ego, std::move(traffic), rng);
}

}  // namespace rainsim
