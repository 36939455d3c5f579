#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "rainsim/config_json.hpp"
#include "rainsim/dataset.hpp"
#include "rainsim/error.hpp"
#include "test_util.hpp"

using namespace rainsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string bytes(std::initializer_list<int> v) {
  std::string s;
  for (int b : v) s.push_back(static_cast<char>(b));
  return s;
}

LidarFrame three_point_frame() {
  LidarFrame f;
  f.points = {{1.0, -2.5, 0.25, 0.5}, {0.0, 0.0, -2.0, 0.0}, {-1.0, 2.0, 0.5, 1.0}};
  f.classes = {SemanticClass::Vehicle, SemanticClass::Ground, SemanticClass::Spray};
  return f;
}

json generate_into(const ScenarioConfig& c, const fs::path& dir) {
  generate(c, config_to_json(c), dir);
  return load_json_file(dir / "manifest.json");
}

bool files_identical(const fs::path& a, const fs::path& b) {
  return read_file_bytes(a) == read_file_bytes(b);
}

bool inside_box(const LidarPoint& p, const BoxLabel& b, double margin) {
  const double dx = p.x - b.center.x, dy = p.y - b.center.y;
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double lx = c * dx + s * dy, ly = -s * dx + c * dy, lz = p.z - b.center.z;
  return std::abs(lx) <= b.size.length / 2 + margin && std::abs(ly) <= b.size.width / 2 + margin &&
         std::abs(lz) <= b.size.height / 2 + margin;
}

}  // namespace

TEST(PointFormat, GoldenBytes) {
  const LidarFrame f = three_point_frame();
  const std::string want = bytes({
      0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x20, 0xc0, 0x00, 0x00, 0x80, 0x3e, 0x00, 0x00, 0x00, 0x3f,
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xc0, 0x00, 0x00, 0x00, 0x00,
      0x00, 0x00, 0x80, 0xbf, 0x00, 0x00, 0x00, 0x40, 0x00, 0x00, 0x00, 0x3f, 0x00, 0x00, 0x80, 0x3f,
  });
  EXPECT_EQ(encode_points(f), want);
  EXPECT_EQ(encode_classes(f), bytes({2, 1, 3}));
}

TEST(PointFormat, RoundTrip) {
  const LidarFrame f = three_point_frame();
  const PointCloud pc = decode_point_cloud(encode_points(f), encode_classes(f));
  ASSERT_EQ(pc.points.size(), 3u);
  EXPECT_EQ(pc.points[0], (std::array<float, 4>{1.0f, -2.5f, 0.25f, 0.5f}));
  EXPECT_EQ(pc.points[2], (std::array<float, 4>{-1.0f, 2.0f, 0.5f, 1.0f}));
  EXPECT_EQ(pc.classes, f.classes);
}

TEST(PointFormat, EmptyFrame) {
  const LidarFrame f;
  EXPECT_EQ(encode_points(f), "");
  EXPECT_EQ(encode_classes(f), "");
  const PointCloud pc = decode_point_cloud("", "");
  EXPECT_TRUE(pc.points.empty());
}

TEST(PointFormat, RefusesUnassignedIntensity) {
  LidarFrame f = three_point_frame();
  f.points[1].intensity = kIntensitySentinel;
  EXPECT_THROW(encode_points(f), FormatError);
  f.points[1].intensity = 1.5;
  EXPECT_THROW(encode_points(f), FormatError);
}

TEST(PointFormat, DecodeRejectsDamage) {
  const LidarFrame f = three_point_frame();
  const std::string bin = encode_points(f);
  EXPECT_THROW(decode_point_cloud(bin.substr(0, 47), encode_classes(f)), FormatError);
  EXPECT_THROW(decode_point_cloud(bin, bytes({2, 1})), FormatError);
  EXPECT_THROW(decode_point_cloud(bin, bytes({2, 1, 9})), FormatError);
}

TEST(RasterFormat, GoldenBytes) {
  RangeRaster r(1, 2, {"depth"});
  r.frame_index = 7;
  r.sector = RasterSector::Rear;
  r.data = {1.0f, 0.5f};
  const std::string header =
      R"({"channels":["depth"],"dtype":"f32le","format_version":1,"frame_index":7,"height":1,"sector":"rear","width":2})";
  const std::string want = std::string("RRASTER1") + bytes({0x6e, 0x00, 0x00, 0x00}) + header +
                           bytes({0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0x3f});
  EXPECT_EQ(encode_range_raster(r), want);
}

TEST(RasterFormat, RoundTripAllChannels) {
  RangeRaster r(64, 30, range_raster_channels());
  r.frame_index = 12;
  for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] = static_cast<float>(i) * 0.25f;
  const RangeRaster back = decode_range_raster(encode_range_raster(r));
  EXPECT_EQ(back.height, 64);
  EXPECT_EQ(back.width, 30);
  EXPECT_EQ(back.channel_names, range_raster_channels());
  EXPECT_EQ(back.frame_index, 12);
  EXPECT_EQ(back.sector, RasterSector::Front);
  EXPECT_EQ(back.data, r.data);
  EXPECT_EQ(back.channel_index("intensity"), 8);
  EXPECT_FALSE(back.channel_index("reflectivity").has_value());
}

TEST(RasterFormat, DecodeRejectsDamage) {
  RangeRaster r(2, 3, {"depth", "intensity"});
  const std::string good = encode_range_raster(r);
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_range_raster(bad_magic), FormatError);
  EXPECT_THROW(decode_range_raster(good.substr(0, good.size() - 4)), FormatError);
  EXPECT_THROW(decode_range_raster(good.substr(0, 10)), FormatError);
  std::string bad_header = good;
  bad_header[12] = '[';
  EXPECT_THROW(decode_range_raster(bad_header), FormatError);
}

TEST(LabelsFormat, GoldenJson) {
  FrameLabels l;
  l.frame_index = 3;
  l.timestamp = 0.3;
  l.ego_pose = {10.0, -1.5, 0.0, 0.0};
  l.ego_speed = 27.5;
  l.boxes.push_back({1, {15.0, 0.0, -1.25}, {4.6, 1.9, 1.5}, 0.0, 27.5});
  l.weather_class = WeatherClass::HeavyRain;
  l.rain_rate_mm_per_h = 45.0;
  l.spray.alive = 2040;
  l.spray.emitted_total = 2100;
  l.spray.emitted_frame = 6;
  l.spray.annihilated_frame = {2, 3, 1};
  l.spray.annihilated_total = {20, 30, 10};
  const std::string want =
      R"({"boxes":[{"center":[15.0,0.0,-1.25],"class":"Vehicle","id":1,"size":[4.6,1.9,1.5],"speed":27.5,"yaw":0.0}],)"
      R"("boxes_frame":"sensor","ego_pose":{"x":10.0,"y":-1.5,"yaw":0.0,"z":0.0},"ego_speed":27.5,)"
      R"("frame_index":3,"rain_rate_mm_per_h":45.0,)"
      R"("spray":{"alive":2040,"annihilated_frame":{"age":1,"collision":2,"range":3},)"
      R"("annihilated_total":{"age":10,"collision":20,"range":30},"emitted_frame":6,)"
      R"("emitted_total":2100,"suppressed_by_cap_total":0},)"
      R"("timestamp":0.3,"weather_class":"HeavyRain","weather_id":3})";
  const json j = labels_to_json(l);
  EXPECT_EQ(j.dump(), want);

  const FrameLabels back = labels_from_json(j);
  EXPECT_EQ(labels_to_json(back), j);
  EXPECT_THROW(labels_from_json(json{{"frame_index", 1}}), FormatError);
}

class GeneratedDataset : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    config_ = rainsim::testing::small_rain_config(6, 21);
    config_.weather.rain_rate_range_mm_per_h = std::array<double, 2>{30.0, 60.0};
    dir_ = rainsim::testing::scratch_dir("dataset_a");
    manifest_ = generate_into(config_, dir_);
  }
  static ScenarioConfig config_;
  static fs::path dir_;
  static json manifest_;
};

ScenarioConfig GeneratedDataset::config_;
fs::path GeneratedDataset::dir_;
json GeneratedDataset::manifest_;

TEST_F(GeneratedDataset, ManifestIsCompleteAndListsEveryFile) {
  EXPECT_EQ(manifest_.at("status"), "complete");
  const auto& frames = manifest_.at("frames");
  ASSERT_EQ(frames.size(), 6u);
  EXPECT_EQ(config_from_json(manifest_.at("config")).rng_seed, 21u);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& f = frames[k];
    EXPECT_EQ(f.at("index"), static_cast<int>(k));
    EXPECT_NEAR(f.at("timestamp").get<double>(), 0.1 * static_cast<double>(k), 1e-12);
    for (const char* key : {"points", "classes", "labels"}) {
      EXPECT_TRUE(fs::exists(dir_ / f.at(key).get<std::string>())) << key << " " << k;
    }
    EXPECT_TRUE(fs::exists(dir_ / f.at("rasters").at("front").get<std::string>()));
    EXPECT_TRUE(fs::exists(dir_ / f.at("rasters").at("rear").get<std::string>()));
    const PointCloud pc = read_point_cloud(dir_ / f.at("points").get<std::string>(),
                                           dir_ / f.at("classes").get<std::string>());
    EXPECT_EQ(f.at("point_count").get<std::size_t>(), pc.points.size());
    for (const auto& p : pc.points) {
      ASSERT_GE(p[3], 0.0f);
      ASSERT_LE(p[3], 1.0f);
    }
  }
}

TEST_F(GeneratedDataset, LabelsCarryWeatherAndTime) {
  const FrameLabels first = labels_from_json(load_json_file(dir_ / "labels" / "000000.json"));
  EXPECT_GE(first.rain_rate_mm_per_h, 30.0);
  EXPECT_LE(first.rain_rate_mm_per_h, 60.0);
  EXPECT_EQ(first.weather_class, WeatherClass::HeavyRain);
  for (int k = 0; k < 6; ++k) {
    const FrameLabels l = labels_from_json(load_json_file(dir_ / "labels" / (frame_stem(k) + ".json")));
    EXPECT_EQ(l.frame_index, k);
    EXPECT_NEAR(l.timestamp, 0.1 * k, 1e-12);
    EXPECT_EQ(l.rain_rate_mm_per_h, first.rain_rate_mm_per_h);
    EXPECT_EQ(l.boxes.size(), 1u);
  }
  const FrameLabels last = labels_from_json(load_json_file(dir_ / "labels" / "000005.json"));
  EXPECT_GT(last.spray.emitted_total, 0u);
  EXPECT_GT(last.spray.alive, 0u);
}

TEST_F(GeneratedDataset, VehiclePointsLieOnLabelledBoxes) {
  std::size_t agree = 0, total = 0;
  for (int k = 0; k < 6; ++k) {
    const std::string s = frame_stem(k);
    const PointCloud pc = read_point_cloud(dir_ / "frames" / (s + ".bin"), dir_ / "frames" / (s + ".cls"));
    const FrameLabels l = labels_from_json(load_json_file(dir_ / "labels" / (s + ".json")));
    for (std::size_t i = 0; i < pc.points.size(); ++i) {
      const LidarPoint p{pc.points[i][0], pc.points[i][1], pc.points[i][2], pc.points[i][3]};
      bool on_box = false;
      for (const auto& b : l.boxes) on_box = on_box || inside_box(p, b, 0.01);
      const bool vehicle = pc.classes[i] == SemanticClass::Vehicle;
      agree += (on_box == vehicle) ? 1 : 0;
      ++total;
    }
  }
  ASSERT_GT(total, 10000u);
  EXPECT_GE(static_cast<double>(agree) / static_cast<double>(total), 0.999);
}

TEST_F(GeneratedDataset, SameSeedGivesIdenticalFiles) {
  const fs::path other = rainsim::testing::scratch_dir("dataset_b");
  generate_into(config_, other);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir_)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir_);
    ASSERT_TRUE(fs::exists(other / rel)) << rel;
    EXPECT_TRUE(files_identical(e.path(), other / rel)) << rel;
    ++compared;
  }
  EXPECT_EQ(compared, 1u + 6u * 5u);
}

TEST_F(GeneratedDataset, StatsSummariseTheDataset) {
  const DatasetStats st = dataset_stats(dir_);
  EXPECT_EQ(st.manifest_frames, 6);
  EXPECT_EQ(st.frames_read, 6);
  EXPECT_TRUE(st.corrupt_files.empty());
  EXPECT_GT(st.class_counts.at("Spray"), 0u);
  EXPECT_GT(st.class_counts.at("Vehicle"), 0u);
  EXPECT_EQ(st.total_points,
            st.class_counts.at("Ground") + st.class_counts.at("Vehicle") + st.class_counts.at("Spray"));
  EXPECT_NEAR(st.spray_fraction,
              static_cast<double>(st.class_counts.at("Spray")) / static_cast<double>(st.total_points), 1e-12);
  EXPECT_EQ(st.frames_per_weather.at("HeavyRain"), 6);
  const double mode = st.intensity_histograms.at("Spray").mode_center();
  EXPECT_GE(mode, 0.002);
  EXPECT_LE(mode, 0.003);
  EXPECT_EQ(st.to_json().at("frames_read"), 6);
}

TEST(DatasetStats, CorruptFilesAreListed) {
  const fs::path dir = rainsim::testing::scratch_dir("dataset_corrupt");
  generate_into(rainsim::testing::small_rain_config(3, 5), dir);
  write_file_bytes(dir / "frames" / "000001.bin", "12345");
  const DatasetStats st = dataset_stats(dir);
  EXPECT_EQ(st.frames_read, 2);
  ASSERT_EQ(st.corrupt_files.size(), 1u);
  EXPECT_NE(st.corrupt_files[0].find("000001"), std::string::npos);
}

TEST(DatasetStats, MissingManifestIsAnIoError) {
  const fs::path dir = rainsim::testing::scratch_dir("dataset_empty");
  EXPECT_THROW(dataset_stats(dir), IoError);
  write_file_bytes(dir / "manifest.json", "{ nope");
  EXPECT_THROW(dataset_stats(dir), FormatError);
}

TEST(DatasetStats, DryRoadHasNoSpray) {
  const fs::path dir = rainsim::testing::scratch_dir("dataset_dry");
  ScenarioConfig c = rainsim::testing::small_rain_config(3, 5);
  c.weather.rain_rate_mm_per_h = 0.0;
  generate_into(c, dir);
  const DatasetStats st = dataset_stats(dir);
  EXPECT_EQ(st.class_counts.at("Spray"), 0u);
  EXPECT_EQ(st.spray_fraction, 0.0);
  EXPECT_EQ(st.frames_per_weather.at("Clear"), 3);
}

TEST(DatasetGenerate, IoFailureLeavesPartialManifest) {
  const fs::path dir = rainsim::testing::scratch_dir("dataset_partial");
  write_file_bytes(dir / "labels", "not a directory");
  const ScenarioConfig c = rainsim::testing::small_rain_config(2, 5);
  EXPECT_THROW(generate(c, config_to_json(c), dir), IoError);
  const json m = load_json_file(dir / "manifest.json");
  EXPECT_EQ(m.at("status"), "partial");
  EXPECT_TRUE(m.contains("error"));
}

TEST(DatasetGenerate, PredictorRastersSupplyIntensity) {
  const fs::path pred = rainsim::testing::scratch_dir("predictor_in");
  const fs::path dir = rainsim::testing::scratch_dir("dataset_pred");
  ScenarioConfig c = rainsim::testing::small_rain_config(2, 5);
  c.intensity.mode = IntensityMode::FromPredictor;
  c.intensity.predictor_dir = pred.string();
  for (int k = 0; k < 2; ++k) {
    for (RasterSector s : {RasterSector::Front, RasterSector::Rear}) {
      RangeRaster r(c.lidar.channels, c.dataset.raster_width, {"intensity"});
      r.frame_index = k;
      r.sector = s;
      std::fill(r.data.begin(), r.data.end(), s == RasterSector::Front ? 0.75f : 0.5f);
      write_range_raster(r, predictor_raster_path(pred, k, s));
    }
  }
  EXPECT_EQ(predictor_raster_path(pred, 3, RasterSector::Rear).filename(), "000003.rear.int.rr");
  generate_into(c, dir);
  const PointCloud pc = read_point_cloud(dir / "frames" / "000001.bin", dir / "frames" / "000001.cls");
  std::size_t solid = 0, spray = 0;
  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    const float v = pc.points[i][3];
    if (pc.classes[i] == SemanticClass::Spray) {
      EXPECT_LT(v, 0.01f);
      ++spray;
    } else {
      EXPECT_TRUE(v == 0.75f || v == 0.5f) << v;
      ++solid;
    }
  }
  EXPECT_GT(solid, 1000u);
  EXPECT_GT(spray, 0u);
}

TEST(DatasetGenerate, MissingPredictorRasterFailsWithPartialManifest) {
  const fs::path pred = rainsim::testing::scratch_dir("predictor_missing");
  const fs::path dir = rainsim::testing::scratch_dir("dataset_pred_missing");
  ScenarioConfig c = rainsim::testing::small_rain_config(2, 5);
  c.intensity.mode = IntensityMode::FromPredictor;
  c.intensity.predictor_dir = pred.string();
  EXPECT_ANY_THROW(generate(c, config_to_json(c), dir));
  EXPECT_EQ(load_json_file(dir / "manifest.json").at("status"), "partial");
}
