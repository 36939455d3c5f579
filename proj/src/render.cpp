#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "rainsim/dataset.hpp"
#include "rainsim/error.hpp"

namespace rainsim {

namespace {

const char* glyph_class(SemanticClass c) {
  switch (c) {
    case SemanticClass::Ground: return "ground";
    case SemanticClass::Vehicle: return "vehicle";
    case SemanticClass::Spray: return "spray";
    default: return "none";
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_top_down_svg(const PointCloud& cloud, const std::vector<BoxLabel>& boxes,
                                const RenderOptions& opt) {
  const double size = opt.size_px;
  const double scale = 0.5 * size / opt.half_extent_m;
  // Sensor +X points up the image and +Y to the left.
  auto px = [&](double y) { return 0.5 * size - y * scale; };
  auto py = [&](double x) { return 0.5 * size - x * scale; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.size_px) +
         "\" height=\"" + std::to_string(opt.size_px) + "\" viewBox=\"0 0 " +
         std::to_string(opt.size_px) + " " + std::to_string(opt.size_px) + "\">\n";
  out +=
      "<style>.ground{fill:#9a9a9a}.vehicle{fill:#1f5fbf}.spray{fill:#00c8e8}"
      ".box{fill:none;stroke:#d62728;stroke-width:1.5}</style>\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#101418\"/>\n";

  for (SemanticClass layer : {SemanticClass::Ground, SemanticClass::Vehicle, SemanticClass::Spray}) {
    const double r = layer == SemanticClass::Spray ? 1.6 : 0.8;
    out += "<g id=\"" + std::string(glyph_class(layer)) + "-points\">\n";
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      if (cloud.classes[i] != layer) continue;
      const auto& p = cloud.points[i];
      if (std::abs(p[0]) > opt.half_extent_m || std::abs(p[1]) > opt.half_extent_m) continue;
      out += "<circle class=\"" + std::string(glyph_class(layer)) + "\" cx=\"" + fmt(px(p[1])) +
             "\" cy=\"" + fmt(py(p[0])) + "\" r=\"" + fmt(r) + "\"/>\n";
    }
    out += "</g>\n";
  }

  out += "<g id=\"boxes\">\n";
  for (const auto& b : boxes) {
    const double c = std::cos(b.yaw), s = std::sin(b.yaw);
    const double hl = 0.5 * b.size.length, hw = 0.5 * b.size.width;
    std::string pts;
    for (const auto& [lx, ly] : {std::pair{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}) {
      const double x = b.center.x + c * lx - s * ly;
      const double y = b.center.y + s * lx + c * ly;
      pts += fmt(px(y)) + "," + fmt(py(x)) + " ";
    }
    out += "<polygon class=\"box\" data-id=\"" + std::to_string(b.id) + "\" points=\"" + pts +
           "\"/>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

std::string render_raster_pgm(const RangeRaster& raster, std::string_view channel) {
  const auto ch = raster.channel_index(channel);
  if (!ch) throw FormatError("raster has no channel named " + std::string(channel));
  float peak = 0.0f;
  for (int r = 0; r < raster.height; ++r)
    for (int c = 0; c < raster.width; ++c) peak = std::max(peak, raster.at(*ch, r, c));

  std::string out = "P5\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) +
                    "\n255\n";
  for (int r = 0; r < raster.height; ++r) {
    for (int c = 0; c < raster.width; ++c) {
      const float v = peak > 0.0f ? raster.at(*ch, r, c) / peak : 0.0f;
      out.push_back(static_cast<char>(static_cast<unsigned char>(
          std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f))));
    }
  }
  return out;
}

}  // namespace rainsim
