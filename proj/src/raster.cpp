#include "rainsim/raster.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "rainsim/error.hpp"

namespace rainsim {

using nlohmann::json;

std::string_view to_string(RasterSector s) { return s == RasterSector::Front ? "front" : "rear"; }

std::optional<RasterSector> raster_sector_from_string(std::string_view s) {
  if (s == "front") return RasterSector::Front;
  if (s == "rear") return RasterSector::Rear;
  return std::nullopt;
}

RangeRaster::RangeRaster(int h, int w, std::vector<std::string> channels)
    : height(h), width(w), channel_names(std::move(channels)) {
  data.assign(static_cast<std::size_t>(channel_count()) * height * width, 0.0f);
}

std::optional<int> RangeRaster::channel_index(std::string_view name) const {
  for (int i = 0; i < channel_count(); ++i) {
    if (channel_names[i] == name) return i;
  }
  return std::nullopt;
}

int raster_column_azimuth(RasterSector sector, int col, int width, int azimuth_steps) {
  const int centre = sector == RasterSector::Front ? 0 : azimuth_steps / 2;
  const int a = (centre + width / 2 - col) % azimuth_steps;
  return a < 0 ? a + azimuth_steps : a;
}

RangeRaster project_range_raster(const LidarFrame& frame, int width, RasterSector sector) {
  if (width < 1 || width > frame.azimuth_steps) {
    throw DomainError("raster width must be in [1, " + std::to_string(frame.azimuth_steps) +
                      "], got " + std::to_string(width));
  }
  RangeRaster r(frame.channels, width, range_raster_channels());
  r.frame_index = frame.frame_index;
  r.sector = sector;
  const float weather = static_cast<float>(static_cast<int>(frame.weather_class));

  for (int row = 0; row < frame.channels; ++row) {
    const int channel = frame.channels - 1 - row;
    for (int col = 0; col < width; ++col) {
      const Hit& h = frame.hit(channel, raster_column_azimuth(sector, col, width, frame.azimuth_steps));
      r.at(5, row, col) = weather;
      if (h.cls == SemanticClass::None) continue;
      const bool solid = h.cls == SemanticClass::Ground || h.cls == SemanticClass::Vehicle;
      r.at(0, row, col) = static_cast<float>(h.range);
      if (solid) {
        r.at(1, row, col) = static_cast<float>(h.albedo.x);
        r.at(2, row, col) = static_cast<float>(h.albedo.y);
        r.at(3, row, col) = static_cast<float>(h.albedo.z);
        r.at(7, row, col) = 1.0f;
      }
      r.at(4, row, col) = static_cast<float>(static_cast<int>(h.cls));
      r.at(6, row, col) = h.dropped ? 1.0f : 0.0f;
      r.at(8, row, col) = h.intensity >= 0.0 ? static_cast<float>(h.intensity) : 0.0f;
    }
  }
  return r;
}

void append_f32le(std::string& out, float v) { append_u32le(out, std::bit_cast<std::uint32_t>(v)); }

float read_f32le(const char* p) { return std::bit_cast<float>(read_u32le(p)); }

void append_u32le(std::string& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.append(b, 4);
}

std::uint32_t read_u32le(const char* p) {
  const auto* u = reinterpret_cast<const unsigned char*>(p);
  return static_cast<std::uint32_t>(u[0]) | (static_cast<std::uint32_t>(u[1]) << 8) |
         (static_cast<std::uint32_t>(u[2]) << 16) | (static_cast<std::uint32_t>(u[3]) << 24);
}

std::string encode_range_raster(const RangeRaster& r) {
  if (r.data.size() != static_cast<std::size_t>(r.channel_count()) * r.height * r.width) {
    throw FormatError("range raster payload does not match its shape");
  }
  const json header = {{"channels", r.channel_names},
                       {"dtype", "f32le"},
                       {"format_version", kRangeRasterFormatVersion},
                       {"frame_index", r.frame_index},
                       {"height", r.height},
                       {"sector", std::string(to_string(r.sector))},
                       {"width", r.width}};
  const std::string text = header.dump();
  std::string out(kRangeRasterMagic, 8);
  append_u32le(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out.reserve(out.size() + 4 * r.data.size());
  for (float v : r.data) append_f32le(out, v);
  return out;
}

RangeRaster decode_range_raster(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 8) != std::string_view(kRangeRasterMagic, 8)) {
    throw FormatError("not a range raster (bad magic)");
  }
  const std::uint32_t header_len = read_u32le(bytes.data() + 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(header_len)) {
    throw FormatError("range raster header truncated");
  }
  json header;
  try {
    header = json::parse(bytes.substr(12, header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("range raster header is not valid JSON: ") + e.what());
  }
  RangeRaster r;
  try {
    if (header.at("dtype").get<std::string>() != "f32le") {
      throw FormatError("unsupported range raster dtype " + header.at("dtype").dump());
    }
    r.height = header.at("height").get<int>();
    r.width = header.at("width").get<int>();
    r.channel_names = header.at("channels").get<std::vector<std::string>>();
    r.frame_index = header.value("frame_index", 0);
    const auto sector = raster_sector_from_string(header.value("sector", std::string("front")));
    if (!sector) throw FormatError("unknown range raster sector " + header.at("sector").dump());
    r.sector = *sector;
  } catch (const json::exception& e) {
    throw FormatError(std::string("range raster header: ") + e.what());
  }
  if (r.height < 0 || r.width < 0) throw FormatError("range raster has a negative dimension");
  const std::size_t count = static_cast<std::size_t>(r.channel_count()) * r.height * r.width;
  const std::size_t offset = 12 + header_len;
  if (bytes.size() != offset + 4 * count) {
    throw FormatError("range raster payload is " + std::to_string(bytes.size() - offset) +
                      " bytes, expected " + std::to_string(4 * count));
  }
  r.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) r.data[i] = read_f32le(bytes.data() + offset + 4 * i);
  return r;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_range_raster(const RangeRaster& raster, const std::filesystem::path& path) {
  write_file_bytes(path, encode_range_raster(raster));
}

RangeRaster read_range_raster(const std::filesystem::path& path) {
  return decode_range_raster(read_file_bytes(path));
}

}  // namespace rainsim
