#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "rainsim/lidar.hpp"
#include "rainsim/raster.hpp"
#include "rainsim/rng.hpp"
#include "rainsim/scene.hpp"

namespace rainsim {

struct EchoParams {
  double transmit_power_Pt = 1.0;
  double receiver_diameter_Drec = 0.05;  // m
  double system_efficiency_eta_sys = 0.9;
  double normalization_range_R0 = 5.0;  // m
};

struct SprayIntensityModel {
  double mean = 0.0025;
  double sigma = 0.0004;
  double clamp_lo = 0.0;
  double clamp_hi = 1.0;
};

// Base reflectance per solid class, modulated by albedo luminance.
struct ReflectanceTable {
  double ground = 0.12;
  double vehicle = 0.35;

  // Throws std::invalid_argument for classes without a surface.
  double base(SemanticClass cls) const;
  double effective(SemanticClass cls, const Vec3& albedo_rgb) const;
};

// Rec. 709 luma weights.
double luminance(const Vec3& rgb);

// pi * D^2 / (4 R^2). Throws DomainError for R <= 0.
double solid_angle(double receiver_diameter, double range);

// exp(-2 alpha R), two-way path. Throws DomainError for R < 0.
double atmospheric_eta(const WeatherConfig& weather, double range);

// Received power P_t * Omega(R) * rho_eff * eta_sys * eta_atm(R), divided by
// the power of a perfect reflector at R0 in clear air and clamped to [0, 1].
double physical_intensity(const Hit& hit, const EchoParams& echo, const ReflectanceTable& table,
                          const WeatherConfig& weather);

double spray_intensity(const SprayIntensityModel& model, RandomStream& rng);

enum class IntensityMode : std::uint8_t { Physical = 0, FromPredictor = 1 };

std::string_view to_string(IntensityMode m);
std::optional<IntensityMode> intensity_mode_from_string(std::string_view s);

struct IntensitySettings {
  EchoParams echo{};
  ReflectanceTable reflectance{};
  SprayIntensityModel spray{};
};

// Predicted intensity rasters for one frame; width is the sector width.
struct PredictorRasters {
  RangeRaster front;
  RangeRaster rear;
};

// Fills the intensity of every hit in the grid (dropped ones included) and
// refreshes the point list. Spray hits always get a spray_intensity sample
// drawn from (seed, frame, channel, azimuth). In FromPredictor mode, solid
// hits inside the front/rear sectors take the predicted value; cells outside
// both sectors fall back to the physical model. Throws FormatError when a
// predictor raster has the wrong shape or lacks an intensity channel.
void assign_intensities(LidarFrame& frame, IntensityMode mode, const IntensitySettings& settings,
                        const WeatherConfig& weather, std::uint64_t seed,
                        const PredictorRasters* predicted = nullptr, int raster_width = 0);

}  // namespace rainsim
