#include "cli.hpp"

#include <filesystem>
#include <iomanip>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rainsim/config_json.hpp"
#include "rainsim/dataset.hpp"
#include "rainsim/error.hpp"
#include "rainsim/kernels.hpp"

namespace rainsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

// Config document after overrides, exactly as it will be recorded.
json config_document(const ConfigArgs& a) {
  json doc = a.path.empty() ? json::object() : load_json_file(a.path);
  for (const auto& o : a.overrides) apply_override(doc, o);
  if (a.seed) doc["rng_seed"] = *a.seed;
  return doc;
}

ScenarioConfig load_config(const ConfigArgs& a, json* doc_out = nullptr) {
  json doc = config_document(a);
  ScenarioConfig cfg = config_from_json(doc);
  validate(cfg);
  if (doc_out) *doc_out = std::move(doc);
  return cfg;
}

void add_config_options(CLI::App* cmd, ConfigArgs& a, bool with_seed) {
  cmd->add_option("-c,--config", a.path, "Scenario JSON file (defaults apply when omitted)");
  cmd->add_option("--set", a.overrides, "Override a config key, e.g. --set road.slope_S=0.03")
      ->take_all();
  if (with_seed) cmd->add_option("--seed", a.seed, "RNG seed (overrides rng_seed)");
}

int cmd_generate(const ConfigArgs& a, const std::string& out_dir, int threads, bool as_json,
                 bool quiet, std::ostream& out, std::ostream& err) {
  json doc;
  const ScenarioConfig cfg = load_config(a, &doc);
  GenerateOptions opts;
  opts.threads = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (!quiet) {
    opts.progress = [&err](int k, int total) {
      if ((k + 1) % 10 == 0 || k + 1 == total) err << "frame " << (k + 1) << "/" << total << "\n";
    };
  }
  const DatasetManifest m = generate(cfg, doc, out_dir, opts);
  if (as_json) {
    out << json{{"status", m.status}, {"frame_count", m.frame_count}, {"out", out_dir},
                {"spray_totals", m.document.at("spray_totals")}}
                .dump()
        << "\n";
  } else {
    out << "wrote " << m.frame_count << " frames to " << out_dir << "\n";
  }
  return 0;
}

int cmd_validate(const ConfigArgs& a, bool as_json, std::ostream& out) {
  load_config(a);
  if (as_json) {
    out << json{{"valid", true}}.dump() << "\n";
  } else {
    out << "config ok\n";
  }
  return 0;
}

int cmd_beam_pattern(const ConfigArgs& a, bool as_json, std::ostream& out) {
  const ScenarioConfig cfg = load_config(a);
  const BeamPattern p = beam_pattern(cfg.lidar);
  if (as_json) {
    json rows = json::array();
    for (std::size_t c = 0; c < p.elevations.size(); ++c) {
      rows.push_back({{"channel", c}, {"elevation_deg", rad_to_deg(p.elevations[c])}});
    }
    out << json{{"channels", rows}, {"azimuth_steps", p.azimuths.size()},
                {"rays_per_frame", p.ray_count()}}
                .dump()
        << "\n";
    return 0;
  }
  out << "channel,elevation_deg\n";
  out << std::setprecision(10);
  for (std::size_t c = 0; c < p.elevations.size(); ++c) {
    out << c << "," << rad_to_deg(p.elevations[c]) << "\n";
  }
  return 0;
}

int cmd_stats(const std::string& dir, bool as_json, std::ostream& out) {
  const DatasetStats s = dataset_stats(dir);
  if (as_json) {
    out << s.to_json().dump() << "\n";
  } else {
    out << s.to_text();
  }
  return 0;
}

int cmd_render(const std::string& dir, int frame, const std::string& out_path, double extent,
               const std::string& raster_dir, bool as_json, std::ostream& out) {
  const json manifest = json::parse(read_file_bytes(fs::path(dir) / "manifest.json"));
  const json* entry = nullptr;
  for (const auto& e : manifest.at("frames")) {
    if (e.at("index").get<int>() == frame) entry = &e;
  }
  if (!entry) throw ConfigError("--frame", "frame " + std::to_string(frame) + " not in dataset");
  const PointCloud pc = read_point_cloud(fs::path(dir) / entry->at("points").get<std::string>(),
                                         fs::path(dir) / entry->at("classes").get<std::string>());
  const FrameLabels labels =
      labels_from_json(json::parse(read_file_bytes(fs::path(dir) / entry->at("labels").get<std::string>())));
  RenderOptions opt;
  opt.half_extent_m = extent;
  write_file_bytes(out_path, render_top_down_svg(pc, labels.boxes, opt));

  std::vector<std::string> written{out_path};
  if (!raster_dir.empty()) {
    fs::create_directories(raster_dir);
    for (const char* sector : {"front", "rear"}) {
      const RangeRaster r =
          read_range_raster(fs::path(dir) / entry->at("rasters").at(sector).get<std::string>());
      for (const auto& ch : r.channel_names) {
        const fs::path p = fs::path(raster_dir) /
                           (frame_stem(frame) + "." + sector + "." + ch + ".pgm");
        write_file_bytes(p, render_raster_pgm(r, ch));
        written.push_back(p.string());
      }
    }
  }
  if (as_json) {
    out << json{{"files", written}}.dump() << "\n";
  } else {
    for (const auto& f : written) out << f << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rainy-highway lidar dataset generator with wheel-spray simulation", "rainsim"};
  app.set_version_flag("--version", generator_version());
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable output on stdout");

  ConfigArgs gen_cfg, val_cfg, beam_cfg;
  std::string out_dir;
  int threads = 0;
  bool quiet = false;
  auto* gen = app.add_subcommand("generate", "Simulate a scenario and write a dataset");
  add_config_options(gen, gen_cfg, true);
  gen->add_option("-o,--out", out_dir, "Output directory")->required();
  gen->add_option("--threads", threads, "Raycasting threads (0 = all cores)");
  gen->add_flag("-q,--quiet", quiet, "No progress on stderr");
  gen->add_flag("--json", as_json, "Machine-readable output on stdout");

  std::string stats_dir;
  auto* stats = app.add_subcommand("stats", "Summarise a generated dataset");
  stats->add_option("dir", stats_dir, "Dataset directory")->required();
  stats->add_flag("--json", as_json, "Machine-readable output on stdout");

  auto* beam = app.add_subcommand("beam-pattern", "Print the beam elevations as CSV");
  add_config_options(beam, beam_cfg, false);
  beam->add_flag("--json", as_json, "Machine-readable output on stdout");

  std::string render_dir, render_out = "frame.svg", raster_dir;
  int render_frame = 0;
  double extent = 40.0;
  auto* render = app.add_subcommand("render", "Top-down SVG of one frame plus raster previews");
  render->add_option("dir", render_dir, "Dataset directory")->required();
  render->add_option("--frame", render_frame, "Frame index");
  render->add_option("-o,--out", render_out, "SVG output path");
  render->add_option("--extent", extent, "Half width of the rendered area in metres");
  render->add_option("--raster-previews", raster_dir, "Directory for per-channel PGM previews");
  render->add_flag("--json", as_json, "Machine-readable output on stdout");

  auto* val = app.add_subcommand("validate-config", "Check a scenario config without running it");
  add_config_options(val, val_cfg, true);
  val->add_option("config_file", val_cfg.path, "Scenario JSON file");
  val->add_flag("--json", as_json, "Machine-readable output on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(gen_cfg, out_dir, threads, as_json, quiet, out, err);
    if (*val) return cmd_validate(val_cfg, as_json, out);
    if (*beam) return cmd_beam_pattern(beam_cfg, as_json, out);
    if (*stats) return cmd_stats(stats_dir, as_json, out);
    if (*render) return cmd_render(render_dir, render_frame, render_out, extent, raster_dir, as_json, out);
  } catch (const ConfigError& e) {
    if (as_json) {
      out << json{{"valid", false}, {"field", e.field()}, {"message", e.what()}}.dump() << "\n";
    }
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    err << "format error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace rainsim
