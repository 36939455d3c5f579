#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rainsim/lidar.hpp"
#include "rainsim/raster.hpp"
#include "rainsim/scenario.hpp"
#include "rainsim/spray.hpp"

namespace rainsim {

inline constexpr int kDatasetFormatVersion = 1;

std::string generator_version();

// --- point clouds: N x (x, y, z, intensity) float32 LE + N uint8 class ids ---

struct PointCloud {
  std::vector<std::array<float, 4>> points;
  std::vector<SemanticClass> classes;
};

// Throws FormatError when any point still carries the sentinel intensity.
std::string encode_points(const LidarFrame& frame);
std::string encode_classes(const LidarFrame& frame);
void write_point_cloud(const LidarFrame& frame, const std::filesystem::path& bin_path,
                       const std::filesystem::path& cls_path);
PointCloud decode_point_cloud(std::string_view bin, std::string_view cls);
PointCloud read_point_cloud(const std::filesystem::path& bin_path,
                            const std::filesystem::path& cls_path);

// --- labels ---

// Box in the sensor frame of the frame it belongs to.
struct BoxLabel {
  int id = 0;
  Vec3 center{};
  BoxSize size{};
  double yaw = 0.0;
  double speed = 0.0;  // m/s
};

struct SprayFrameStats {
  std::uint64_t alive = 0;
  std::uint64_t emitted_total = 0;
  std::uint64_t emitted_frame = 0;
  AnnihilationCounts annihilated_total{};
  AnnihilationCounts annihilated_frame{};
  std::uint64_t suppressed_by_cap_total = 0;
};

struct FrameLabels {
  int frame_index = 0;
  double timestamp = 0.0;
  Pose ego_pose{};  // world frame
  double ego_speed = 0.0;
  std::vector<BoxLabel> boxes;
  WeatherClass weather_class = WeatherClass::Clear;
  double rain_rate_mm_per_h = 0.0;
  SprayFrameStats spray{};
};

FrameLabels make_frame_labels(const LidarFrame& frame, const Scene& scene,
                              const SprayFrameStats& spray);
nlohmann::json labels_to_json(const FrameLabels& labels);
FrameLabels labels_from_json(const nlohmann::json& j);

// --- generation ---

struct DatasetManifest {
  std::string status;  // "complete" or "partial"
  int frame_count = 0;
  nlohmann::json document;
};

struct GenerateOptions {
  int threads = 1;  // raycasting threads; results do not depend on it
  std::function<void(int frame, int total)> progress;
};

// File names inside a dataset directory.
std::string frame_stem(int frame_index);
std::filesystem::path predictor_raster_path(const std::filesystem::path& dir, int frame_index,
                                            RasterSector sector);

// Runs the scenario and writes manifest.json, frames/, labels/ and rasters/
// under out_dir. `config_doc` is stored verbatim in the manifest. The
// manifest is written last; an I/O failure still writes it with status
// "partial" (when possible) before rethrowing.
DatasetManifest generate(const ScenarioConfig& config, const nlohmann::json& config_doc,
                         const std::filesystem::path& out_dir, const GenerateOptions& options = {});

// --- stats ---

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::uint64_t> bins;

  Histogram() = default;
  Histogram(double lo_, double hi_, int n) : lo(lo_), hi(hi_), bins(static_cast<std::size_t>(n), 0) {}
  void add(double v);
  double mode_center() const;
  std::uint64_t total() const;
};

struct DatasetStats {
  int manifest_frames = 0;
  int frames_read = 0;
  std::map<std::string, std::uint64_t> class_counts;  // Ground, Vehicle, Spray
  std::uint64_t total_points = 0;
  double spray_fraction = 0.0;
  std::map<std::string, Histogram> intensity_histograms;
  std::map<std::string, int> frames_per_weather;
  std::vector<std::string> corrupt_files;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Throws IoError when the manifest is missing or unreadable; damaged frame
// files are listed in corrupt_files instead.
DatasetStats dataset_stats(const std::filesystem::path& dir);

// --- rendering ---

struct RenderOptions {
  double half_extent_m = 40.0;
  int size_px = 800;
};

// Top-down view in the sensor frame (+X up the image): one glyph per point,
// tagged with its class, and box outlines.
std::string render_top_down_svg(const PointCloud& cloud, const std::vector<BoxLabel>& boxes,
                                const RenderOptions& options = {});

// 8-bit binary PGM of one raster channel, scaled by the channel maximum.
std::string render_raster_pgm(const RangeRaster& raster, std::string_view channel);

}  // namespace rainsim
