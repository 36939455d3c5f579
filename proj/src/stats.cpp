#include <algorithm>
#include <cmath>
#include <sstream>

#include "rainsim/dataset.hpp"
#include "rainsim/error.hpp"

namespace rainsim {

using nlohmann::json;
namespace fs = std::filesystem;

void Histogram::add(double v) {
  if (bins.empty()) return;
  const double f = (v - lo) / (hi - lo);
  auto i = static_cast<std::ptrdiff_t>(std::floor(f * static_cast<double>(bins.size())));
  i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(bins.size()) - 1);
  ++bins[static_cast<std::size_t>(i)];
}

double Histogram::mode_center() const {
  if (bins.empty()) return lo;
  const auto it = std::max_element(bins.begin(), bins.end());
  const double w = (hi - lo) / static_cast<double>(bins.size());
  return lo + w * (static_cast<double>(it - bins.begin()) + 0.5);
}

std::uint64_t Histogram::total() const {
  std::uint64_t t = 0;
  for (auto b : bins) t += b;
  return t;
}

json DatasetStats::to_json() const {
  json hist = json::object();
  for (const auto& [name, h] : intensity_histograms) {
    hist[name] = {{"lo", h.lo}, {"hi", h.hi}, {"bins", h.bins}, {"mode", h.mode_center()}};
  }
  return {{"manifest_frames", manifest_frames},
          {"frames_read", frames_read},
          {"class_counts", class_counts},
          {"total_points", total_points},
          {"spray_fraction", spray_fraction},
          {"intensity_histograms", hist},
          {"frames_per_weather", frames_per_weather},
          {"corrupt_files", corrupt_files}};
}

std::string DatasetStats::to_text() const {
  std::ostringstream os;
  os << "frames: " << frames_read << " read / " << manifest_frames << " in manifest\n";
  os << "points: " << total_points << "\n";
  for (const auto& [name, n] : class_counts) os << "  " << name << ": " << n << "\n";
  os << "spray fraction: " << spray_fraction << "\n";
  os << "intensity mode per class:\n";
  for (const auto& [name, h] : intensity_histograms) {
    os << "  " << name << ": " << h.mode_center() << " (" << h.total() << " points in ["
       << h.lo << ", " << h.hi << "])\n";
  }
  os << "frames per weather class:\n";
  for (const auto& [name, n] : frames_per_weather) os << "  " << name << ": " << n << "\n";
  if (!corrupt_files.empty()) {
    os << "corrupt files:\n";
    for (const auto& f : corrupt_files) os << "  " << f << "\n";
  }
  return os.str();
}

DatasetStats dataset_stats(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_file_bytes(manifest_path));
  } catch (const json::exception& e) {
    throw FormatError("manifest.json is not valid JSON: " + std::string(e.what()));
  }

  DatasetStats s;
  s.class_counts = {{"Ground", 0}, {"Vehicle", 0}, {"Spray", 0}};
  s.intensity_histograms = {{"Ground", Histogram(0.0, 1.0, 50)},
                            {"Vehicle", Histogram(0.0, 1.0, 50)},
                            {"Spray", Histogram(0.0, 0.005, 50)}};
  s.manifest_frames = manifest.value("frame_count", 0);

  const json frames = manifest.value("frames", json::array());
  for (const auto& entry : frames) {
    std::string current;
    try {
      current = entry.at("points").get<std::string>();
      const std::string cls_name = entry.at("classes").get<std::string>();
      const PointCloud pc = read_point_cloud(dir / current, dir / cls_name);
      current = entry.at("labels").get<std::string>();
      const FrameLabels labels = labels_from_json(json::parse(read_file_bytes(dir / current)));
      for (const char* sector : {"front", "rear"}) {
        current = entry.at("rasters").at(sector).get<std::string>();
        read_range_raster(dir / current);
      }

      for (std::size_t i = 0; i < pc.points.size(); ++i) {
        const std::string name(to_string(pc.classes[i]));
        if (pc.classes[i] == SemanticClass::None) continue;
        ++s.class_counts[name];
        s.intensity_histograms[name].add(pc.points[i][3]);
        ++s.total_points;
      }
      ++s.frames_per_weather[std::string(to_string(labels.weather_class))];
      ++s.frames_read;
    } catch (const std::exception& e) {
      s.corrupt_files.push_back((current.empty() ? std::string("<manifest entry>") : current) +
                                ": " + e.what());
    }
  }
  s.spray_fraction = s.total_points == 0
                         ? 0.0
                         : static_cast<double>(s.class_counts["Spray"]) /
                               static_cast<double>(s.total_points);
  return s;
}

}  // namespace rainsim
