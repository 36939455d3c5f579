#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rainsim/lidar.hpp"

namespace rainsim {

enum class RasterSector : std::uint8_t { Front = 0, Rear = 1 };

std::string_view to_string(RasterSector s);
std::optional<RasterSector> raster_sector_from_string(std::string_view s);

// Channel names of the rasters the simulator writes, in storage order.
inline const std::vector<std::string>& range_raster_channels() {
  static const std::vector<std::string> names{
      "depth",       "albedo_r",  "albedo_g",  "albedo_b", "semantic_id",
      "weather_id",  "drop_mask", "rgb_valid", "intensity"};
  return names;
}

// Multi-channel equirectangular range image. Storage is planar float32:
// data[(channel * height + row) * width + col]. Row 0 is the top beam;
// column 0 is the leftmost azimuth of the sector.
//
// File layout:
//   8 bytes   magic "RRASTER1"
//   uint32 LE length of the header
//   header    compact JSON: channels, dtype "f32le", frame_index, height,
//             sector, width, format_version
//   payload   channels * height * width float32 little-endian values
struct RangeRaster {
  int height = 0;
  int width = 0;
  std::vector<std::string> channel_names;
  int frame_index = 0;
  RasterSector sector = RasterSector::Front;
  std::vector<float> data;

  RangeRaster() = default;
  RangeRaster(int height, int width, std::vector<std::string> channels);

  int channel_count() const { return static_cast<int>(channel_names.size()); }
  std::optional<int> channel_index(std::string_view name) const;
  float& at(int channel, int row, int col) {
    return data[(static_cast<std::size_t>(channel) * height + row) * width + col];
  }
  float at(int channel, int row, int col) const {
    return data[(static_cast<std::size_t>(channel) * height + row) * width + col];
  }
};

inline constexpr char kRangeRasterMagic[9] = "RRASTER1";
inline constexpr int kRangeRasterFormatVersion = 1;

// Azimuth index shown in column `col` of a sector raster `width` columns wide.
// The front sector is centred on the ego heading, the rear sector on the
// opposite direction; left of the image is the vehicle's left.
int raster_column_azimuth(RasterSector sector, int col, int width, int azimuth_steps);

// Projects a frame onto a sector raster. Dropped returns keep their depth and
// are flagged in drop_mask; cells without a return are all zero.
RangeRaster project_range_raster(const LidarFrame& frame, int width,
                                 RasterSector sector = RasterSector::Front);

std::string encode_range_raster(const RangeRaster& raster);
RangeRaster decode_range_raster(std::string_view bytes);
void write_range_raster(const RangeRaster& raster, const std::filesystem::path& path);
RangeRaster read_range_raster(const std::filesystem::path& path);

// Little-endian helpers shared by the binary formats.
void append_f32le(std::string& out, float v);
float read_f32le(const char* p);
void append_u32le(std::string& out, std::uint32_t v);
std::uint32_t read_u32le(const char* p);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace rainsim
