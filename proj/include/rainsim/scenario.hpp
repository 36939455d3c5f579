#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "rainsim/intensity.hpp"
#include "rainsim/lidar.hpp"
#include "rainsim/scene.hpp"
#include "rainsim/spray.hpp"

namespace rainsim {

// Weather as written in a config: either a fixed rain rate or a range the
// scenario draws its rate from once. Class and extinction default to values
// derived from the rate.
struct WeatherSpec {
  double rain_rate_mm_per_h = 0.0;
  std::optional<std::array<double, 2>> rain_rate_range_mm_per_h;
  std::optional<WeatherClass> weather_class;
  Vec3 wind_velocity{};
  std::optional<double> attenuation_alpha_per_m;
};

// Rate-based class used when a config does not name one.
WeatherClass classify_rain_rate(double rain_rate_mm_per_h);

struct IntensityConfig {
  IntensitySettings settings{};
  IntensityMode mode = IntensityMode::Physical;
  // Directory holding NNNNNN.front.int.rr / NNNNNN.rear.int.rr predictor
  // outputs; used in predictor mode.
  std::string predictor_dir;
};

struct DatasetOptions {
  int raster_width = 1250;
};

struct ScenarioConfig {
  WeatherSpec weather{};
  RoadSurface road{};
  EgoSpec ego{};
  std::optional<std::array<double, 2>> ego_speed_range;  // m/s, drawn once
  TrafficSpec traffic{};
  double frame_rate_hz = 10.0;
  int duration_frames = 100;
  std::uint64_t rng_seed = 0;
  LidarModel lidar{};
  SprayParams spray{};
  IntensityConfig intensity{};
  DatasetOptions dataset{};
};

// Checks every field; throws ConfigError naming the first offending field by
// its dotted path (e.g. "road.slope_S").
void validate(const ScenarioConfig& config);

// Weather after drawing the rain rate (when a range is given) and filling in
// the derived class and extinction.
WeatherConfig resolve_weather(const WeatherSpec& spec, RandomStream& rng);

// Validates, then builds the frame-0 scene: ego at the origin of its lane plus
// sampled or placed traffic. Identical config and seed give identical scenes.
Scene build_scenario(const ScenarioConfig& config);

}  // namespace rainsim
