#include "rainsim/config_json.hpp"

#include <fstream>
#include <set>
#include <vector>

#include "rainsim/error.hpp"

namespace rainsim {

using nlohmann::json;

namespace {

constexpr double kKmh = 3.6;

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(std::string_view key) const { return j_.contains(key); }
  std::string field(std::string_view key) const { return join(path_, key); }

  const json* find(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(std::string_view key, double& out, double scale = 1.0) {
    if (const json* v = find(key)) out = as_number(*v, field(key)) * scale;
  }
  void integer(std::string_view key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void boolean(std::string_view key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void string(std::string_view key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  std::vector<double> numbers(const json& v, const std::string& f, std::size_t n = 0) {
    if (!v.is_array()) throw ConfigError(f, "expected an array of numbers");
    if (n != 0 && v.size() != n) {
      throw ConfigError(f, "expected " + std::to_string(n) + " numbers, got " +
                               std::to_string(v.size()));
    }
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_number(e, f));
    return out;
  }
  void pair(std::string_view key, double& lo, double& hi, double scale = 1.0) {
    if (const json* v = find(key)) {
      const auto p = numbers(*v, field(key), 2);
      lo = p[0] * scale;
      hi = p[1] * scale;
    }
  }
  void angle_range(std::string_view key, AngleRange& r) {
    double lo = rad_to_deg(r.lo), hi = rad_to_deg(r.hi);
    if (has(key)) {
      pair(key, lo, hi);
      r = {deg_to_rad(lo), deg_to_rad(hi)};
    } else {
      seen_.insert(std::string(key));
    }
  }
  void vec3(std::string_view key, Vec3& out) {
    if (const json* v = find(key)) {
      const auto p = numbers(*v, field(key), 3);
      out = {p[0], p[1], p[2]};
    }
  }
  Reader child(std::string_view key) {
    const json* v = find(key);
    return v ? Reader(*v, field(key)) : Reader(empty_object(), field(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ConfigError(field(it.key()), "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& f) {
    if (!v.is_number()) throw ConfigError(f, "expected a number");
    return v.get<double>();
  }

 private:
  static const json& empty_object() {
    static const json e = json::object();
    return e;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_tire(Reader r, TireSpec& t) {
  r.number("groove_width_fraction_K", t.groove_width_fraction_K);
  r.number("contact_width_b", t.contact_width_b);
  r.number("groove_depth_h_groove", t.groove_depth_h_groove);
  r.number("film_depth_h_film", t.film_depth_h_film);
  r.finish();
}

void read_body(Reader r, VehicleTemplate& b) {
  {
    Reader box = r.child("box");
    box.number("length", b.box.length);
    box.number("width", b.box.width);
    box.number("height", b.box.height);
    box.finish();
  }
  read_tire(r.child("tire"), b.tire);
  if (const json* v = r.find("rear_wheel_offsets")) {
    const std::string f = r.field("rear_wheel_offsets");
    if (!v->is_array() || v->size() != 2) throw ConfigError(f, "expected two [x, y] pairs");
    for (std::size_t i = 0; i < 2; ++i) {
      const auto p = r.numbers((*v)[i], f, 2);
      b.rear_wheel_offsets[i] = {p[0], p[1]};
    }
  }
  r.finish();
}

json body_to_json(const VehicleTemplate& b) {
  return {{"box", {{"length", b.box.length}, {"width", b.box.width}, {"height", b.box.height}}},
          {"tire",
           {{"groove_width_fraction_K", b.tire.groove_width_fraction_K},
            {"contact_width_b", b.tire.contact_width_b},
            {"groove_depth_h_groove", b.tire.groove_depth_h_groove},
            {"film_depth_h_film", b.tire.film_depth_h_film}}},
          {"rear_wheel_offsets",
           {{b.rear_wheel_offsets[0].x, b.rear_wheel_offsets[0].y},
            {b.rear_wheel_offsets[1].x, b.rear_wheel_offsets[1].y}}}};
}

json vec_json(const Vec3& v) { return {v.x, v.y, v.z}; }
json deg_pair(const AngleRange& r) { return {rad_to_deg(r.lo), rad_to_deg(r.hi)}; }

}  // namespace

ScenarioConfig config_from_json(const json& doc) {
  ScenarioConfig c;
  Reader root(doc, "");

  if (const json* v = root.find("rng_seed")) {
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                    v->get<std::int64_t>() < 0)) {
      throw ConfigError("rng_seed", "expected a non-negative integer");
    }
    c.rng_seed = v->get<std::uint64_t>();
  }
  root.number("frame_rate_hz", c.frame_rate_hz);
  root.integer("duration_frames", c.duration_frames);

  {
    Reader w = root.child("weather");
    w.number("rain_rate_mm_per_h", c.weather.rain_rate_mm_per_h);
    if (w.has("rain_rate_range_mm_per_h")) {
      std::array<double, 2> r{};
      w.pair("rain_rate_range_mm_per_h", r[0], r[1]);
      c.weather.rain_rate_range_mm_per_h = r;
    } else {
      w.find("rain_rate_range_mm_per_h");
    }
    if (const json* v = w.find("weather_class")) {
      const auto cls = v->is_string() ? weather_class_from_string(v->get<std::string>())
                                      : std::nullopt;
      if (!cls) {
        throw ConfigError(w.field("weather_class"),
                          "expected one of Clear, WetGround, LightRain, HeavyRain");
      }
      c.weather.weather_class = cls;
    }
    w.vec3("wind_velocity", c.weather.wind_velocity);
    if (const json* v = w.find("attenuation_alpha_per_m")) {
      c.weather.attenuation_alpha_per_m = Reader::as_number(*v, w.field("attenuation_alpha_per_m"));
    }
    w.finish();
  }

  {
    Reader r = root.child("road");
    r.number("texture_depth_T", c.road.texture_depth_T);
    r.number("drainage_length_L", c.road.drainage_length_L);
    r.number("slope_S", c.road.slope_S);
    r.vec3("albedo_rgb", c.road.albedo_rgb);
    Reader e = r.child("extent");
    e.number("x_min", c.road.extent.x_min);
    e.number("x_max", c.road.extent.x_max);
    e.number("y_min", c.road.extent.y_min);
    e.number("y_max", c.road.extent.y_max);
    e.finish();
    r.finish();
  }

  {
    Reader e = root.child("ego");
    e.number("speed_kmh", c.ego.speed, 1.0 / kKmh);
    if (e.has("speed_range_kmh")) {
      std::array<double, 2> r{};
      e.pair("speed_range_kmh", r[0], r[1], 1.0 / kKmh);
      c.ego_speed_range = r;
    } else {
      e.find("speed_range_kmh");
    }
    e.number("lane_y", c.ego.lane_y);
    e.vec3("albedo_rgb", c.ego.albedo_rgb);
    e.boolean("emits_spray", c.ego.emits_spray);
    read_body(e.child("body"), c.ego.body);
    e.finish();
  }

  {
    Reader t = root.child("traffic");
    if (const json* v = t.find("count_range")) {
      const std::string f = t.field("count_range");
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number_integer() ||
          !(*v)[1].is_number_integer()) {
        throw ConfigError(f, "expected [min, max] integers");
      }
      c.traffic.count_min = (*v)[0].get<int>();
      c.traffic.count_max = (*v)[1].get<int>();
    }
    t.pair("speed_range_kmh", c.traffic.speed_min, c.traffic.speed_max, 1.0 / kKmh);
    if (const json* v = t.find("lane_offsets_y")) {
      c.traffic.lane_offsets_y = t.numbers(*v, t.field("lane_offsets_y"));
    }
    t.number("corridor_ahead_m", c.traffic.corridor_ahead_m);
    t.number("corridor_behind_m", c.traffic.corridor_behind_m);
    t.number("min_gap_m", c.traffic.min_gap_m);
    read_body(t.child("body"), c.traffic.body);
    if (const json* v = t.find("placed")) {
      if (!v->is_array()) throw ConfigError(t.field("placed"), "expected an array");
      for (std::size_t i = 0; i < v->size(); ++i) {
        Reader p((*v)[i], t.field("placed") + "[" + std::to_string(i) + "]");
        PlacedVehicle pv;
        p.number("offset_x", pv.offset_x);
        p.number("lane_y", pv.lane_y);
        p.number("speed_kmh", pv.speed, 1.0 / kKmh);
        if (p.has("albedo_rgb")) {
          Vec3 a;
          p.vec3("albedo_rgb", a);
          pv.albedo_rgb = a;
        } else {
          p.find("albedo_rgb");
        }
        p.finish();
        c.traffic.placed.push_back(pv);
      }
    }
    t.finish();
  }

  {
    Reader l = root.child("lidar");
    l.integer("channels", c.lidar.channels);
    l.number("points_per_second", c.lidar.points_per_second);
    l.number("rotation_hz", c.lidar.rotation_hz);
    l.number("max_range_m", c.lidar.max_range_m);
    l.pair("vfov_deg", c.lidar.vfov_lower_deg, c.lidar.vfov_upper_deg);
    l.number("mount_height_m", c.lidar.mount_height_m);
    l.number("beam_divergence_rad", c.lidar.beam_divergence_rad);
    l.number("drop_probability", c.lidar.drop_probability);
    l.number("intercept_gain_kappa", c.lidar.intercept_gain_kappa);
    l.finish();
  }

  {
    Reader s = root.child("spray");
    auto& p = c.spray;
    s.number("droplet_diameter", p.droplet_diameter);
    s.integer("cluster_size", p.cluster_size);
    s.number("cluster_radius", p.cluster_radius);
    s.number("weight_interval_s", p.weight_interval_s);
    s.pair("weight_range", p.weight_min, p.weight_max);
    s.angle_range("tread_pickup_n_deg", p.tread_pickup_n);
    s.angle_range("tread_pickup_l_deg", p.tread_pickup_l);
    s.angle_range("side_wave_n_deg", p.side_wave_n);
    s.angle_range("side_wave_l_deg", p.side_wave_l);
    s.number("side_wave_speed_fraction", p.side_wave_speed_fraction);
    s.number("lateral_speed_init", p.lateral_speed_init);
    s.number("lateral_decay_tau_s", p.lateral_decay_tau_s);
    s.number("wake_asymmetry_a", p.wake_asymmetry_a);
    s.number("wake_flip_mean_s", p.wake_flip_mean_s);
    s.number("max_age_s", p.max_age_s);
    s.number("max_range_m", p.max_range_m);
    s.number("substep_dt_s", p.substep_dt_s);
    s.number("drag_cd", p.drag_cd);
    s.number("air_density", p.air_density);
    s.number("water_density", p.water_density);
    s.number("gravity", p.gravity);
    s.integer("max_clusters_per_wheel_per_frame", p.max_clusters_per_wheel_per_frame);
    s.number("emission_scale", p.emission_scale);
    s.number("tread_pickup_height_m", p.tread_pickup_height_m);
    s.number("side_wave_height_m", p.side_wave_height_m);
    s.number("spawn_clearance_m", p.spawn_clearance_m);
    s.finish();
  }

  {
    Reader in = root.child("intensity");
    if (const json* v = in.find("mode")) {
      const auto mode = v->is_string() ? intensity_mode_from_string(v->get<std::string>())
                                       : std::nullopt;
      if (!mode) throw ConfigError(in.field("mode"), "expected \"physical\" or \"predictor\"");
      c.intensity.mode = *mode;
    }
    in.string("predictor_dir", c.intensity.predictor_dir);
    auto& st = c.intensity.settings;
    Reader echo = in.child("echo");
    echo.number("transmit_power_Pt", st.echo.transmit_power_Pt);
    echo.number("receiver_diameter_Drec", st.echo.receiver_diameter_Drec);
    echo.number("system_efficiency_eta_sys", st.echo.system_efficiency_eta_sys);
    echo.number("normalization_range_R0", st.echo.normalization_range_R0);
    echo.finish();
    Reader refl = in.child("reflectance");
    refl.number("ground", st.reflectance.ground);
    refl.number("vehicle", st.reflectance.vehicle);
    refl.finish();
    Reader sp = in.child("spray");
    sp.number("mean", st.spray.mean);
    sp.number("sigma", st.spray.sigma);
    sp.pair("clamp", st.spray.clamp_lo, st.spray.clamp_hi);
    sp.finish();
    in.finish();
  }

  {
    Reader d = root.child("dataset");
    d.integer("raster_width", c.dataset.raster_width);
    d.finish();
  }

  root.finish();
  return c;
}

json config_to_json(const ScenarioConfig& c) {
  json weather = {{"rain_rate_mm_per_h", c.weather.rain_rate_mm_per_h},
                  {"wind_velocity", vec_json(c.weather.wind_velocity)}};
  if (c.weather.rain_rate_range_mm_per_h) {
    weather["rain_rate_range_mm_per_h"] = *c.weather.rain_rate_range_mm_per_h;
  }
  if (c.weather.weather_class) {
    weather["weather_class"] = std::string(to_string(*c.weather.weather_class));
  }
  if (c.weather.attenuation_alpha_per_m) {
    weather["attenuation_alpha_per_m"] = *c.weather.attenuation_alpha_per_m;
  }

  json ego = {{"speed_kmh", c.ego.speed * kKmh},
              {"lane_y", c.ego.lane_y},
              {"albedo_rgb", vec_json(c.ego.albedo_rgb)},
              {"emits_spray", c.ego.emits_spray},
              {"body", body_to_json(c.ego.body)}};
  if (c.ego_speed_range) {
    ego["speed_range_kmh"] = {(*c.ego_speed_range)[0] * kKmh, (*c.ego_speed_range)[1] * kKmh};
  }

  json placed = json::array();
  for (const auto& p : c.traffic.placed) {
    json e = {{"offset_x", p.offset_x}, {"lane_y", p.lane_y}, {"speed_kmh", p.speed * kKmh}};
    if (p.albedo_rgb) e["albedo_rgb"] = vec_json(*p.albedo_rgb);
    placed.push_back(e);
  }

  const auto& s = c.spray;
  const auto& st = c.intensity.settings;
  return {
      {"rng_seed", c.rng_seed},
      {"frame_rate_hz", c.frame_rate_hz},
      {"duration_frames", c.duration_frames},
      {"weather", weather},
      {"road",
       {{"texture_depth_T", c.road.texture_depth_T},
        {"drainage_length_L", c.road.drainage_length_L},
        {"slope_S", c.road.slope_S},
        {"albedo_rgb", vec_json(c.road.albedo_rgb)},
        {"extent",
         {{"x_min", c.road.extent.x_min},
          {"x_max", c.road.extent.x_max},
          {"y_min", c.road.extent.y_min},
          {"y_max", c.road.extent.y_max}}}}},
      {"ego", ego},
      {"traffic",
       {{"count_range", {c.traffic.count_min, c.traffic.count_max}},
        {"speed_range_kmh", {c.traffic.speed_min * kKmh, c.traffic.speed_max * kKmh}},
        {"lane_offsets_y", c.traffic.lane_offsets_y},
        {"corridor_ahead_m", c.traffic.corridor_ahead_m},
        {"corridor_behind_m", c.traffic.corridor_behind_m},
        {"min_gap_m", c.traffic.min_gap_m},
        {"body", body_to_json(c.traffic.body)},
        {"placed", placed}}},
      {"lidar",
       {{"channels", c.lidar.channels},
        {"points_per_second", c.lidar.points_per_second},
        {"rotation_hz", c.lidar.rotation_hz},
        {"max_range_m", c.lidar.max_range_m},
        {"vfov_deg", {c.lidar.vfov_lower_deg, c.lidar.vfov_upper_deg}},
        {"mount_height_m", c.lidar.mount_height_m},
        {"beam_divergence_rad", c.lidar.beam_divergence_rad},
        {"drop_probability", c.lidar.drop_probability},
        {"intercept_gain_kappa", c.lidar.intercept_gain_kappa}}},
      {"spray",
       {{"droplet_diameter", s.droplet_diameter},
        {"cluster_size", s.cluster_size},
        {"cluster_radius", s.cluster_radius},
        {"weight_interval_s", s.weight_interval_s},
        {"weight_range", {s.weight_min, s.weight_max}},
        {"tread_pickup_n_deg", deg_pair(s.tread_pickup_n)},
        {"tread_pickup_l_deg", deg_pair(s.tread_pickup_l)},
        {"side_wave_n_deg", deg_pair(s.side_wave_n)},
        {"side_wave_l_deg", deg_pair(s.side_wave_l)},
        {"side_wave_speed_fraction", s.side_wave_speed_fraction},
        {"lateral_speed_init", s.lateral_speed_init},
        {"lateral_decay_tau_s", s.lateral_decay_tau_s},
        {"wake_asymmetry_a", s.wake_asymmetry_a},
        {"wake_flip_mean_s", s.wake_flip_mean_s},
        {"max_age_s", s.max_age_s},
        {"max_range_m", s.max_range_m},
        {"substep_dt_s", s.substep_dt_s},
        {"drag_cd", s.drag_cd},
        {"air_density", s.air_density},
        {"water_density", s.water_density},
        {"gravity", s.gravity},
        {"max_clusters_per_wheel_per_frame", s.max_clusters_per_wheel_per_frame},
        {"emission_scale", s.emission_scale},
        {"tread_pickup_height_m", s.tread_pickup_height_m},
        {"side_wave_height_m", s.side_wave_height_m},
        {"spawn_clearance_m", s.spawn_clearance_m}}},
      {"intensity",
       {{"mode", std::string(to_string(c.intensity.mode))},
        {"predictor_dir", c.intensity.predictor_dir},
        {"echo",
         {{"transmit_power_Pt", st.echo.transmit_power_Pt},
          {"receiver_diameter_Drec", st.echo.receiver_diameter_Drec},
          {"system_efficiency_eta_sys", st.echo.system_efficiency_eta_sys},
          {"normalization_range_R0", st.echo.normalization_range_R0}}},
        {"reflectance", {{"ground", st.reflectance.ground}, {"vehicle", st.reflectance.vehicle}}},
        {"spray",
         {{"mean", st.spray.mean},
          {"sigma", st.spray.sigma},
          {"clamp", {st.spray.clamp_lo, st.spray.clamp_hi}}}}}},
      {"dataset", {{"raster_width", c.dataset.raster_width}}},
  };
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError(std::string(assignment), "override must look like key.path=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }

  if (!doc.is_object()) doc = json::object();
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos
                                                                        : dot - start);
    if (part.empty()) throw ConfigError(key, "empty path component in override");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    json& next = (*node)[part];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) {
      throw ConfigError(key.substr(0, dot), "cannot override inside a non-object value");
    }
    node = &next;
    start = dot + 1;
  }
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON in ") + path.string() + ": " + e.what());
  }
}

}  // namespace rainsim
