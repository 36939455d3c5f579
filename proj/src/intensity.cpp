#include "rainsim/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "rainsim/error.hpp"

namespace rainsim {

double luminance(const Vec3& rgb) { return 0.2126 * rgb.x + 0.7152 * rgb.y + 0.0722 * rgb.z; }

double ReflectanceTable::base(SemanticClass cls) const {
  switch (cls) {
    case SemanticClass::Ground: return ground;
    case SemanticClass::Vehicle: return vehicle;
    default: break;
  }
  throw std::invalid_argument("no reflectance for semantic class " + std::string(to_string(cls)));
}

double ReflectanceTable::effective(SemanticClass cls, const Vec3& albedo_rgb) const {
  return base(cls) * luminance(albedo_rgb);
}

double solid_angle(double receiver_diameter, double range) {
  if (!(range > 0.0)) throw DomainError("solid_angle: range must be > 0");
  return std::numbers::pi * receiver_diameter * receiver_diameter / (4.0 * range * range);
}

double atmospheric_eta(const WeatherConfig& weather, double range) {
  if (!(range >= 0.0)) throw DomainError("atmospheric_eta: range must be >= 0");
  return std::exp(-2.0 * weather.attenuation_alpha_per_m * range);
}

double physical_intensity(const Hit& hit, const EchoParams& echo, const ReflectanceTable& table,
                          const WeatherConfig& weather) {
  const double rho = table.effective(hit.cls, hit.albedo);
  const double raw = echo.transmit_power_Pt * solid_angle(echo.receiver_diameter_Drec, hit.range) *
                     rho * echo.system_efficiency_eta_sys * atmospheric_eta(weather, hit.range);
  const double anchor = echo.transmit_power_Pt *
                        solid_angle(echo.receiver_diameter_Drec, echo.normalization_range_R0) *
                        echo.system_efficiency_eta_sys;
  return std::clamp(raw / anchor, 0.0, 1.0);
}

double spray_intensity(const SprayIntensityModel& model, RandomStream& rng) {
  return std::clamp(rng.normal(model.mean, model.sigma), model.clamp_lo, model.clamp_hi);
}

std::string_view to_string(IntensityMode m) {
  return m == IntensityMode::Physical ? "physical" : "predictor";
}

std::optional<IntensityMode> intensity_mode_from_string(std::string_view s) {
  if (s == "physical") return IntensityMode::Physical;
  if (s == "predictor" || s == "from_predictor") return IntensityMode::FromPredictor;
  return std::nullopt;
}

namespace {

// Predicted value per grid cell, NaN where no sector covers the cell.
std::vector<float> predicted_grid(const LidarFrame& frame, const PredictorRasters& pred,
                                  int raster_width) {
  std::vector<float> cells(frame.grid.size(), std::numeric_limits<float>::quiet_NaN());
  for (const RangeRaster* r : {&pred.front, &pred.rear}) {
    const int expected_w = raster_width > 0 ? raster_width : r->width;
    if (r->height != frame.channels || r->width != expected_w || r->width > frame.azimuth_steps) {
      throw FormatError("predictor raster (" + std::string(to_string(r->sector)) + ") shape: expected " +
                        std::to_string(frame.channels) + "x" + std::to_string(expected_w) +
                        ", found " + std::to_string(r->height) + "x" + std::to_string(r->width));
    }
    const auto ch = r->channel_index("intensity");
    if (!ch) throw FormatError("predictor raster has no intensity channel");
    for (int row = 0; row < r->height; ++row) {
      const int channel = frame.channels - 1 - row;
      for (int col = 0; col < r->width; ++col) {
        const int az = raster_column_azimuth(r->sector, col, r->width, frame.azimuth_steps);
        cells[static_cast<std::size_t>(channel) * frame.azimuth_steps + az] = r->at(*ch, row, col);
      }
    }
  }
  return cells;
}

}  // namespace

void assign_intensities(LidarFrame& frame, IntensityMode mode, const IntensitySettings& settings,
                        const WeatherConfig& weather, std::uint64_t seed,
                        const PredictorRasters* predicted, int raster_width) {
  std::vector<float> pred;
  if (mode == IntensityMode::FromPredictor) {
    if (predicted == nullptr) throw FormatError("predictor intensity mode needs predictor rasters");
    pred = predicted_grid(frame, *predicted, raster_width);
  }
  const PhiloxKey spray_key = derive_key(seed, Stream::SprayIntensity,
                                         static_cast<std::uint64_t>(frame.frame_index));

  for (int c = 0; c < frame.channels; ++c) {
    for (int a = 0; a < frame.azimuth_steps; ++a) {
      Hit& h = frame.hit(c, a);
      if (h.cls == SemanticClass::None) continue;
      if (h.cls == SemanticClass::Spray) {
        RandomStream rng(spray_key, static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(a));
        h.intensity = spray_intensity(settings.spray, rng);
        continue;
      }
      const std::size_t i = static_cast<std::size_t>(c) * frame.azimuth_steps + a;
      if (!pred.empty() && !std::isnan(pred[i])) {
        h.intensity = std::clamp(static_cast<double>(pred[i]), 0.0, 1.0);
      } else {
        h.intensity = physical_intensity(h, settings.echo, settings.reflectance, weather);
      }
    }
  }
  frame.rebuild_points();
}

}  // namespace rainsim
