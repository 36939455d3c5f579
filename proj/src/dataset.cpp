#include "rainsim/dataset.hpp"

#include <cstdio>

#include "rainsim/config_json.hpp"
#include "rainsim/error.hpp"
#include "rainsim/intensity.hpp"

namespace rainsim {

using nlohmann::json;
namespace fs = std::filesystem;

std::string generator_version() { return std::string("rainsim ") + RAINSIM_VERSION_STRING; }

std::string encode_points(const LidarFrame& frame) {
  std::string out;
  out.reserve(frame.points.size() * 16);
  for (const auto& p : frame.points) {
    if (!(p.intensity >= 0.0 && p.intensity <= 1.0)) {
      throw FormatError("point cloud has unassigned or out-of-range intensity");
    }
    append_f32le(out, static_cast<float>(p.x));
    append_f32le(out, static_cast<float>(p.y));
    append_f32le(out, static_cast<float>(p.z));
    append_f32le(out, static_cast<float>(p.intensity));
  }
  return out;
}

std::string encode_classes(const LidarFrame& frame) {
  std::string out;
  out.reserve(frame.classes.size());
  for (auto c : frame.classes) out.push_back(static_cast<char>(c));
  return out;
}

void write_point_cloud(const LidarFrame& frame, const fs::path& bin_path, const fs::path& cls_path) {
  const std::string points = encode_points(frame);
  write_file_bytes(bin_path, points);
  write_file_bytes(cls_path, encode_classes(frame));
}

PointCloud decode_point_cloud(std::string_view bin, std::string_view cls) {
  if (bin.size() % 16 != 0) {
    throw FormatError("point file size " + std::to_string(bin.size()) + " is not a multiple of 16");
  }
  const std::size_t n = bin.size() / 16;
  if (cls.size() != n) {
    throw FormatError("class file has " + std::to_string(cls.size()) + " entries for " +
                      std::to_string(n) + " points");
  }
  PointCloud pc;
  pc.points.resize(n);
  pc.classes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 4; ++k) pc.points[i][k] = read_f32le(bin.data() + 16 * i + 4 * k);
    const auto id = static_cast<unsigned char>(cls[i]);
    if (id > 3) throw FormatError("unknown class id " + std::to_string(id));
    pc.classes[i] = static_cast<SemanticClass>(id);
  }
  return pc;
}

PointCloud read_point_cloud(const fs::path& bin_path, const fs::path& cls_path) {
  return decode_point_cloud(read_file_bytes(bin_path), read_file_bytes(cls_path));
}

FrameLabels make_frame_labels(const LidarFrame& frame, const Scene& scene,
                              const SprayFrameStats& spray) {
  FrameLabels l;
  l.frame_index = frame.frame_index;
  l.timestamp = frame.timestamp;
  l.ego_pose = scene.ego().pose;
  l.ego_speed = scene.ego().speed;
  for (const auto& v : scene.traffic()) {
    BoxLabel b;
    b.id = v.id;
    b.center = frame.to_sensor(v.box_center());
    b.size = v.box;
    b.yaw = v.pose.yaw - frame.ego_pose.yaw;
    b.speed = v.speed;
    l.boxes.push_back(b);
  }
  l.weather_class = scene.weather().weather_class;
  l.rain_rate_mm_per_h = scene.weather().rain_rate_mm_per_h;
  l.spray = spray;
  return l;
}

namespace {

json counts_json(const AnnihilationCounts& c) {
  return {{"collision", c.collision}, {"range", c.range}, {"age", c.age}};
}

AnnihilationCounts counts_from(const json& j) {
  return {j.at("collision").get<std::uint64_t>(), j.at("range").get<std::uint64_t>(),
          j.at("age").get<std::uint64_t>()};
}

}  // namespace

json labels_to_json(const FrameLabels& l) {
  json boxes = json::array();
  for (const auto& b : l.boxes) {
    boxes.push_back({{"id", b.id},
                     {"center", {b.center.x, b.center.y, b.center.z}},
                     {"size", {b.size.length, b.size.width, b.size.height}},
                     {"yaw", b.yaw},
                     {"speed", b.speed},
                     {"class", "Vehicle"}});
  }
  return {{"frame_index", l.frame_index},
          {"timestamp", l.timestamp},
          {"ego_pose", {{"x", l.ego_pose.x}, {"y", l.ego_pose.y}, {"z", l.ego_pose.z},
                        {"yaw", l.ego_pose.yaw}}},
          {"ego_speed", l.ego_speed},
          {"boxes_frame", "sensor"},
          {"boxes", boxes},
          {"weather_class", std::string(to_string(l.weather_class))},
          {"weather_id", static_cast<int>(l.weather_class)},
          {"rain_rate_mm_per_h", l.rain_rate_mm_per_h},
          {"spray",
           {{"alive", l.spray.alive},
            {"emitted_total", l.spray.emitted_total},
            {"emitted_frame", l.spray.emitted_frame},
            {"annihilated_total", counts_json(l.spray.annihilated_total)},
            {"annihilated_frame", counts_json(l.spray.annihilated_frame)},
            {"suppressed_by_cap_total", l.spray.suppressed_by_cap_total}}}};
}

FrameLabels labels_from_json(const json& j) {
  try {
    FrameLabels l;
    l.frame_index = j.at("frame_index").get<int>();
    l.timestamp = j.at("timestamp").get<double>();
    const auto& p = j.at("ego_pose");
    l.ego_pose = {p.at("x").get<double>(), p.at("y").get<double>(), p.at("z").get<double>(),
                  p.at("yaw").get<double>()};
    l.ego_speed = j.at("ego_speed").get<double>();
    for (const auto& b : j.at("boxes")) {
      BoxLabel box;
      box.id = b.at("id").get<int>();
      const auto c = b.at("center").get<std::array<double, 3>>();
      box.center = {c[0], c[1], c[2]};
      const auto s = b.at("size").get<std::array<double, 3>>();
      box.size = {s[0], s[1], s[2]};
      box.yaw = b.at("yaw").get<double>();
      box.speed = b.at("speed").get<double>();
      l.boxes.push_back(box);
    }
    const auto cls = weather_class_from_string(j.at("weather_class").get<std::string>());
    if (!cls) throw FormatError("unknown weather_class in labels");
    l.weather_class = *cls;
    l.rain_rate_mm_per_h = j.at("rain_rate_mm_per_h").get<double>();
    const auto& s = j.at("spray");
    l.spray.alive = s.at("alive").get<std::uint64_t>();
    l.spray.emitted_total = s.at("emitted_total").get<std::uint64_t>();
    l.spray.emitted_frame = s.at("emitted_frame").get<std::uint64_t>();
    l.spray.annihilated_total = counts_from(s.at("annihilated_total"));
    l.spray.annihilated_frame = counts_from(s.at("annihilated_frame"));
    l.spray.suppressed_by_cap_total = s.at("suppressed_by_cap_total").get<std::uint64_t>();
    return l;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed labels: ") + e.what());
  }
}

std::string frame_stem(int frame_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", frame_index);
  return buf;
}

fs::path predictor_raster_path(const fs::path& dir, int frame_index, RasterSector sector) {
  return dir / (frame_stem(frame_index) + "." + std::string(to_string(sector)) + ".int.rr");
}

namespace {

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

json frame_entry(int k, const LidarFrame& frame) {
  const std::string s = frame_stem(k);
  std::uint64_t counts[4] = {0, 0, 0, 0};
  for (auto c : frame.classes) ++counts[static_cast<int>(c)];
  return {{"index", k},
          {"timestamp", frame.timestamp},
          {"points", "frames/" + s + ".bin"},
          {"classes", "frames/" + s + ".cls"},
          {"labels", "labels/" + s + ".json"},
          {"rasters", {{"front", "rasters/" + s + ".front.rr"}, {"rear", "rasters/" + s + ".rear.rr"}}},
          {"point_count", frame.points.size()},
          {"class_counts",
           {{"Ground", counts[1]}, {"Vehicle", counts[2]}, {"Spray", counts[3]}}}};
}

}  // namespace

DatasetManifest generate(const ScenarioConfig& config, const json& config_doc,
                         const fs::path& out_dir, const GenerateOptions& options) {
  validate(config);
  Scene scene = build_scenario(config);
  SpraySystem spray(config.spray, config.rng_seed);
  const double dt = 1.0 / config.frame_rate_hz;
  const int total = config.duration_frames;

  json frames = json::array();
  json manifest = {{"format_version", kDatasetFormatVersion},
                   {"generator", generator_version()},
                   {"rng_seed", config.rng_seed},
                   {"config", config_doc},
                   {"resolved_config", config_to_json(config)},
                   {"weather",
                    {{"rain_rate_mm_per_h", scene.weather().rain_rate_mm_per_h},
                     {"weather_class", std::string(to_string(scene.weather().weather_class))},
                     {"attenuation_alpha_per_m", scene.weather().attenuation_alpha_per_m}}},
                   {"spray_budget",
                    {{"emission_scale", config.spray.emission_scale},
                     {"max_clusters_per_wheel_per_frame",
                      config.spray.max_clusters_per_wheel_per_frame}}},
                   {"formats",
                    {{"points", "float32le x,y,z,intensity; sensor frame"},
                     {"classes", "uint8 semantic id: 0 None, 1 Ground, 2 Vehicle, 3 Spray"},
                     {"labels", "json"},
                     {"rasters", std::string(kRangeRasterMagic) + " v" +
                                     std::to_string(kRangeRasterFormatVersion)}}},
                   {"raster_channels", range_raster_channels()}};

  auto write_manifest = [&](const std::string& status, int written, const std::string& error) {
    manifest["status"] = status;
    manifest["frame_count"] = written;
    manifest["frames"] = frames;
    if (!error.empty()) manifest["error"] = error;
    manifest["spray_totals"] = {{"emitted", spray.counters().emitted},
                                {"alive", spray.alive()},
                                {"annihilated", counts_json(spray.counters().annihilated)},
                                {"suppressed_by_cap", spray.counters().suppressed_by_cap}};
    write_file_bytes(out_dir / "manifest.json", manifest.dump(2) + "\n");
  };

  int written = 0;
  try {
    ensure_dir(out_dir / "frames");
    ensure_dir(out_dir / "labels");
    ensure_dir(out_dir / "rasters");

    for (int k = 0; k < total; ++k) {
      SprayFrameStats stats;
      const std::uint64_t emitted_before = spray.counters().emitted;
      if (k > 0) {
        spray.emit_frame(scene, dt);
        scene = step(std::move(scene), dt);
        spray.integrate_frame(scene.weather(), dt);
      }
      const Vec3 origin = lidar_origin(scene.ego(), config.lidar);
      stats.annihilated_frame = spray.annihilate_frame(scene, origin);
      stats.emitted_frame = spray.counters().emitted - emitted_before;
      stats.emitted_total = spray.counters().emitted;
      stats.annihilated_total = spray.counters().annihilated;
      stats.alive = spray.alive();
      stats.suppressed_by_cap_total = spray.counters().suppressed_by_cap;

      ScanOptions scan;
      scan.frame_index = k;
      scan.timestamp = static_cast<double>(k) / config.frame_rate_hz;
      scan.seed = config.rng_seed;
      scan.threads = options.threads;
      LidarFrame frame = scan_frame(scene, spray.clusters(), config.lidar, config.spray, scan);

      if (config.intensity.mode == IntensityMode::FromPredictor) {
        const fs::path dir(config.intensity.predictor_dir);
        PredictorRasters pred{read_range_raster(predictor_raster_path(dir, k, RasterSector::Front)),
                              read_range_raster(predictor_raster_path(dir, k, RasterSector::Rear))};
        pred.front.sector = RasterSector::Front;
        pred.rear.sector = RasterSector::Rear;
        assign_intensities(frame, IntensityMode::FromPredictor, config.intensity.settings,
                           scene.weather(), config.rng_seed, &pred, config.dataset.raster_width);
      } else {
        assign_intensities(frame, IntensityMode::Physical, config.intensity.settings,
                           scene.weather(), config.rng_seed);
      }

      const std::string s = frame_stem(k);
      write_point_cloud(frame, out_dir / "frames" / (s + ".bin"), out_dir / "frames" / (s + ".cls"));
      const FrameLabels labels = make_frame_labels(frame, scene, stats);
      write_file_bytes(out_dir / "labels" / (s + ".json"), labels_to_json(labels).dump(2) + "\n");
      for (RasterSector sector : {RasterSector::Front, RasterSector::Rear}) {
        write_range_raster(project_range_raster(frame, config.dataset.raster_width, sector),
                           out_dir / "rasters" / (s + "." + std::string(to_string(sector)) + ".rr"));
      }
      frames.push_back(frame_entry(k, frame));
      ++written;
      if (options.progress) options.progress(k, total);
    }
  } catch (const std::exception& e) {
    try {
      write_manifest("partial", written, e.what());
    } catch (const IoError&) {
    }
    throw;
  }

  write_manifest("complete", written, "");
  return {"complete", written, manifest};
}

}  // namespace rainsim
