#include "limoco/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "limoco/errors.hpp"

namespace limoco::io {

namespace {

using nlohmann::json;

std::string g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::FILE* open_or_throw(const std::string& path, const char* mode) {
  std::FILE* f = std::fopen(path.c_str(), mode);
  if (!f) throw DataError("cannot open file: " + path);
  return f;
}

bool read_line(std::FILE* f, std::string& out) {
  out.clear();
  int c;
  while ((c = std::fgetc(f)) != EOF) {
    if (c == '\n') return true;
    if (c != '\r') out.push_back(static_cast<char>(c));
  }
  return !out.empty();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    if (comma == std::string::npos) {
      out.push_back(line.substr(begin));
      return out;
    }
    out.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

double parse_double(const std::string& s, const std::string& path, long line) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw DataError(path + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

long parse_long(const std::string& s, const std::string& path, long line) {
  long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw DataError(path + ":" + std::to_string(line) + ": bad integer '" + s + "'");
  }
  return v;
}

void expect_header(std::FILE* f, const char* expected, const std::string& path) {
  std::string line;
  if (!read_line(f, line) || line != expected) {
    std::fclose(f);
    throw DataError(path + ": expected header '" + std::string(expected) + "'");
  }
}

void read_rows_expect(const std::string& path, const char* header, std::size_t fields,
                      std::vector<std::vector<std::string>>& rows) {
  std::FILE* f = open_or_throw(path, "rb");
  expect_header(f, header, path);
  std::string line;
  long line_no = 1;
  while (read_line(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto parts = split_csv(line);
    if (parts.size() != fields) {
      std::fclose(f);
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(fields) + " fields, found " + std::to_string(parts.size()));
    }
    rows.push_back(std::move(parts));
  }
  std::fclose(f);
}

}  // namespace

std::string label_to_string(DynamicLabel label) {
  switch (label) {
    case DynamicLabel::Static: return "static";
    case DynamicLabel::Dynamic: return "dynamic";
    default: return "unknown";
  }
}

DynamicLabel label_from_string(const std::string& s) {
  if (s == "static") return DynamicLabel::Static;
  if (s == "dynamic") return DynamicLabel::Dynamic;
  if (s == "unknown") return DynamicLabel::Unknown;
  throw DataError("bad label '" + s + "'");
}

void write_points_csv(const std::string& path, const std::vector<LidarPoint>& points) {
  std::FILE* f = open_or_throw(path, "wb");
  std::fputs("t,x,y,z,channel\n", f);
  for (const LidarPoint& p : points) {
    std::fprintf(f, "%s,%s,%s,%s,%d\n", g9(p.t).c_str(), g9(p.position.x()).c_str(),
                 g9(p.position.y()).c_str(), g9(p.position.z()).c_str(), p.channel);
  }
  std::fclose(f);
}

std::vector<LidarPoint> read_points_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  read_rows_expect(path, "t,x,y,z,channel", 5, rows);
  std::vector<LidarPoint> out;
  out.reserve(rows.size());
  long line = 1;
  for (const auto& r : rows) {
    ++line;
    out.push_back({parse_double(r[0], path, line),
                   {parse_double(r[1], path, line), parse_double(r[2], path, line),
                    parse_double(r[3], path, line)},
                   static_cast<int>(parse_long(r[4], path, line))});
  }
  return out;
}

void write_imu_csv(const std::string& path, const std::vector<ImuSample>& samples) {
  std::FILE* f = open_or_throw(path, "wb");
  std::fputs("t,ax,ay,az,wx,wy,wz\n", f);
  for (const ImuSample& s : samples) {
    std::fprintf(f, "%s,%s,%s,%s,%s,%s,%s\n", g9(s.t).c_str(), g9(s.accel.x()).c_str(),
                 g9(s.accel.y()).c_str(), g9(s.accel.z()).c_str(), g9(s.gyro.x()).c_str(),
                 g9(s.gyro.y()).c_str(), g9(s.gyro.z()).c_str());
  }
  std::fclose(f);
}

std::vector<ImuSample> read_imu_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  read_rows_expect(path, "t,ax,ay,az,wx,wy,wz", 7, rows);
  std::vector<ImuSample> out;
  out.reserve(rows.size());
  long line = 1;
  for (const auto& r : rows) {
    ++line;
    out.push_back({parse_double(r[0], path, line),
                   {parse_double(r[1], path, line), parse_double(r[2], path, line),
                    parse_double(r[3], path, line)},
                   {parse_double(r[4], path, line), parse_double(r[5], path, line),
                    parse_double(r[6], path, line)}});
  }
  return out;
}

void write_corrected_csv(const std::string& path, const std::vector<CorrectedRow>& rows) {
  std::FILE* f = open_or_throw(path, "wb");
  std::fputs("t,x,y,z,channel,window_id\n", f);
  for (const CorrectedRow& r : rows) {
    std::fprintf(f, "%s,%s,%s,%s,%d,%d\n", g9(r.t).c_str(), g9(r.position.x()).c_str(),
                 g9(r.position.y()).c_str(), g9(r.position.z()).c_str(), r.channel,
                 r.window_id);
  }
  std::fclose(f);
}

std::vector<CorrectedRow> read_corrected_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  read_rows_expect(path, "t,x,y,z,channel,window_id", 6, rows);
  std::vector<CorrectedRow> out;
  out.reserve(rows.size());
  long line = 1;
  for (const auto& r : rows) {
    ++line;
    out.push_back({parse_double(r[0], path, line),
                   {parse_double(r[1], path, line), parse_double(r[2], path, line),
                    parse_double(r[3], path, line)},
                   static_cast<int>(parse_long(r[4], path, line)),
                   static_cast<int>(parse_long(r[5], path, line))});
  }
  return out;
}

void write_labelled_csv(const std::string& path, const std::vector<LabelledRow>& rows) {
  std::FILE* f = open_or_throw(path, "wb");
  std::fputs("t,x,y,z,score,label\n", f);
  for (const LabelledRow& r : rows) {
    std::fprintf(f, "%s,%s,%s,%s,%s,%s\n", g9(r.t).c_str(), g9(r.position.x()).c_str(),
                 g9(r.position.y()).c_str(), g9(r.position.z()).c_str(), g9(r.score).c_str(),
                 label_to_string(r.label).c_str());
  }
  std::fclose(f);
}

std::vector<LabelledRow> read_labelled_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  read_rows_expect(path, "t,x,y,z,score,label", 6, rows);
  std::vector<LabelledRow> out;
  out.reserve(rows.size());
  long line = 1;
  for (const auto& r : rows) {
    ++line;
    out.push_back({parse_double(r[0], path, line),
                   {parse_double(r[1], path, line), parse_double(r[2], path, line),
                    parse_double(r[3], path, line)},
                   parse_double(r[4], path, line), label_from_string(r[5])});
  }
  return out;
}

void write_truth_csv(const std::string& path, const std::vector<TruthRow>& rows) {
  std::FILE* f = open_or_throw(path, "wb");
  std::fputs("t,x,y,z,score,label,body_id\n", f);
  for (const TruthRow& r : rows) {
    std::fprintf(f, "%s,%s,%s,%s,%s,%s,%d\n", g9(r.t).c_str(), g9(r.position.x()).c_str(),
                 g9(r.position.y()).c_str(), g9(r.position.z()).c_str(), g9(r.score).c_str(),
                 label_to_string(r.label).c_str(), r.body_id);
  }
  std::fclose(f);
}

std::vector<TruthRow> read_truth_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  read_rows_expect(path, "t,x,y,z,score,label,body_id", 7, rows);
  std::vector<TruthRow> out;
  out.reserve(rows.size());
  long line = 1;
  for (const auto& r : rows) {
    ++line;
    out.push_back({parse_double(r[0], path, line),
                   {parse_double(r[1], path, line), parse_double(r[2], path, line),
                    parse_double(r[3], path, line)},
                   parse_double(r[4], path, line), label_from_string(r[5]),
                   static_cast<int>(parse_long(r[6], path, line))});
  }
  return out;
}

std::vector<Vec3> read_xyz_csv(const std::string& path) {
  std::FILE* f = open_or_throw(path, "rb");
  std::string line;
  if (!read_line(f, line)) {
    std::fclose(f);
    throw DataError(path + ": empty file");
  }
  const auto header = split_csv(line);
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "x") ix = static_cast<int>(i);
    if (header[i] == "y") iy = static_cast<int>(i);
    if (header[i] == "z") iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    std::fclose(f);
    throw DataError(path + ": header lacks x,y,z columns");
  }
  std::vector<Vec3> out;
  long line_no = 1;
  while (read_line(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto parts = split_csv(line);
    if (parts.size() != header.size()) {
      std::fclose(f);
      throw DataError(path + ":" + std::to_string(line_no) + ": field count mismatch");
    }
    out.emplace_back(parse_double(parts[ix], path, line_no),
                     parse_double(parts[iy], path, line_no),
                     parse_double(parts[iz], path, line_no));
  }
  std::fclose(f);
  return out;
}

CsvPointSource::CsvPointSource(const std::string& path) : path_(path) {
  file_ = open_or_throw(path, "rb");
  expect_header(file_, "t,x,y,z,channel", path);
}

CsvPointSource::~CsvPointSource() {
  if (file_) std::fclose(file_);
}

std::optional<LidarPoint> CsvPointSource::next() {
  std::string line;
  while (read_line(file_, line)) {
    ++line_;
    if (line.empty()) continue;
    const auto parts = split_csv(line);
    if (parts.size() != 5) {
      throw DataError(path_ + ":" + std::to_string(line_) + ": expected 5 fields");
    }
    return LidarPoint{parse_double(parts[0], path_, line_),
                      {parse_double(parts[1], path_, line_),
                       parse_double(parts[2], path_, line_),
                       parse_double(parts[3], path_, line_)},
                      static_cast<int>(parse_long(parts[4], path_, line_))};
  }
  return std::nullopt;
}

CsvImuSource::CsvImuSource(const std::string& path) : path_(path) {
  file_ = open_or_throw(path, "rb");
  expect_header(file_, "t,ax,ay,az,wx,wy,wz", path);
}

CsvImuSource::~CsvImuSource() {
  if (file_) std::fclose(file_);
}

std::optional<ImuSample> CsvImuSource::next() {
  std::string line;
  while (read_line(file_, line)) {
    ++line_;
    if (line.empty()) continue;
    const auto parts = split_csv(line);
    if (parts.size() != 7) {
      throw DataError(path_ + ":" + std::to_string(line_) + ": expected 7 fields");
    }
    return ImuSample{parse_double(parts[0], path_, line_),
                     {parse_double(parts[1], path_, line_),
                      parse_double(parts[2], path_, line_),
                      parse_double(parts[3], path_, line_)},
                     {parse_double(parts[4], path_, line_),
                      parse_double(parts[5], path_, line_),
                      parse_double(parts[6], path_, line_)}};
  }
  return std::nullopt;
}

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) ok = true;
    }
    if (!ok) throw ConfigError(context + ": unknown key '" + key + "'");
  }
}

Vec3 get_vec3(const json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(context + ": expected an array of 3 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

RigidTransform parse_extrinsic(const json& j, const std::string& context) {
  check_keys(j, {"rotation_axis_angle", "translation"}, context);
  RigidTransform t;
  if (j.contains("rotation_axis_angle")) {
    t.rotation = so3_exp(get_vec3(j["rotation_axis_angle"], context));
  }
  if (j.contains("translation")) {
    t.translation = get_vec3(j["translation"], context);
  }
  return t;
}

std::vector<Sinusoid> parse_sinusoids(const json& j, const std::string& context) {
  std::vector<Sinusoid> out;
  for (const auto& term : j) {
    check_keys(term, {"amplitude", "frequency", "phase"}, context);
    Sinusoid s;
    s.amplitude = term.value("amplitude", 0.0);
    s.frequency = term.value("frequency", 0.0);
    s.phase = term.value("phase", 0.0);
    out.push_back(s);
  }
  return out;
}

}  // namespace

Scene load_scene(const std::string& path) {
  const json j = load_json(path);
  check_keys(j, {"bodies"}, path);
  if (!j.contains("bodies")) throw ConfigError(path + ": missing 'bodies'");
  Scene scene;
  for (const auto& jb : j["bodies"]) {
    check_keys(jb, {"name", "box", "triangles", "velocity", "dynamic"}, path);
    Vec3 velocity = Vec3::Zero();
    if (jb.contains("velocity")) velocity = get_vec3(jb["velocity"], path);
    Body body;
    if (jb.contains("box")) {
      check_keys(jb["box"], {"min", "max"}, path);
      body = make_box(jb.value("name", ""), get_vec3(jb["box"]["min"], path),
                      get_vec3(jb["box"]["max"], path), velocity);
    } else if (jb.contains("triangles")) {
      body.name = jb.value("name", "");
      body.velocity = velocity;
      body.dynamic = velocity.norm() > 0.0;
      for (const auto& jt : jb["triangles"]) {
        if (!jt.is_array() || jt.size() != 3) {
          throw ConfigError(path + ": each triangle needs 3 vertices");
        }
        body.triangles.push_back(
            {get_vec3(jt[0], path), get_vec3(jt[1], path), get_vec3(jt[2], path)});
      }
    } else {
      throw ConfigError(path + ": body needs 'box' or 'triangles'");
    }
    if (jb.contains("dynamic")) body.dynamic = jb["dynamic"].get<bool>();
    scene.bodies.push_back(std::move(body));
  }
  return scene;
}

TrajectorySpec load_trajectory(const std::string& path) {
  const json j = load_json(path);
  check_keys(j, {"duration", "position", "orientation"}, path);
  TrajectorySpec traj;
  traj.duration = j.value("duration", 1.0);
  const char* axes[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    if (j.contains("position")) {
      check_keys(j["position"], {"x", "y", "z"}, path);
      if (j["position"].contains(axes[a])) {
        traj.position[a] = parse_sinusoids(j["position"][axes[a]], path);
      }
    }
    if (j.contains("orientation")) {
      check_keys(j["orientation"], {"x", "y", "z"}, path);
      if (j["orientation"].contains(axes[a])) {
        traj.orientation[a] = parse_sinusoids(j["orientation"][axes[a]], path);
      }
    }
  }
  return traj;
}

void load_sensors(const std::string& path, LidarSpec& lidar, ImuSpec& imu) {
  const json j = load_json(path);
  check_keys(j, {"lidar", "imu"}, path);
  if (j.contains("lidar")) {
    const json& jl = j["lidar"];
    check_keys(jl,
               {"channels", "vertical_fov_deg", "rotation_rate", "points_per_rev",
                "range_noise_sigma", "extrinsic"},
               path);
    lidar.channels = jl.value("channels", lidar.channels);
    if (jl.contains("vertical_fov_deg")) {
      lidar.vertical_fov = jl["vertical_fov_deg"].get<double>() * M_PI / 180.0;
    }
    lidar.rotation_rate = jl.value("rotation_rate", lidar.rotation_rate);
    lidar.points_per_rev = jl.value("points_per_rev", lidar.points_per_rev);
    lidar.range_noise_sigma = jl.value("range_noise_sigma", lidar.range_noise_sigma);
    if (jl.contains("extrinsic")) lidar.extrinsic = parse_extrinsic(jl["extrinsic"], path);
    if (lidar.channels < 1 || lidar.points_per_rev < 1 || !(lidar.rotation_rate > 0.0)) {
      throw ConfigError(path + ": lidar counts and rates must be positive");
    }
  }
  if (j.contains("imu")) {
    const json& ji = j["imu"];
    check_keys(ji,
               {"rate", "accel_noise_sigma", "gyro_noise_sigma", "accel_bias", "gyro_bias",
                "gravity", "padding"},
               path);
    imu.rate = ji.value("rate", imu.rate);
    imu.accel_noise_sigma = ji.value("accel_noise_sigma", imu.accel_noise_sigma);
    imu.gyro_noise_sigma = ji.value("gyro_noise_sigma", imu.gyro_noise_sigma);
    if (ji.contains("accel_bias")) imu.bias.accel = get_vec3(ji["accel_bias"], path);
    if (ji.contains("gyro_bias")) imu.bias.gyro = get_vec3(ji["gyro_bias"], path);
    if (ji.contains("gravity")) imu.gravity = get_vec3(ji["gravity"], path);
    imu.padding = ji.value("padding", imu.padding);
    if (!(imu.rate > 0.0)) throw ConfigError(path + ": imu rate must be positive");
  }
}

RunConfig load_config(const std::string& path) {
  const json j = load_json(path);
  check_keys(j,
             {"seed", "extrinsic", "window_length", "segment_length", "preint_rate",
              "features", "association", "solver", "dynamics"},
             path);
  RunConfig config;
  PipelineConfig& p = config.pipeline;
  p.seed = j.value("seed", 0ull);
  p.window_length = j.value("window_length", p.window_length);
  p.segment_length = j.value("segment_length", p.segment_length);
  p.preint_rate = j.value("preint_rate", p.preint_rate);
  if (j.contains("extrinsic")) p.extrinsic = parse_extrinsic(j["extrinsic"], path);

  if (j.contains("features")) {
    const json& jf = j["features"];
    check_keys(jf, {"n", "planar_threshold", "max_planar_per_segment", "edge_min_prominence"},
               path);
    p.features.n = jf.value("n", p.features.n);
    p.features.planar_threshold = jf.value("planar_threshold", p.features.planar_threshold);
    p.features.max_planar_per_segment =
        jf.value("max_planar_per_segment", p.features.max_planar_per_segment);
    p.features.edge_min_prominence =
        jf.value("edge_min_prominence", p.features.planar_threshold);
    if (p.features.n < 1 || !(p.features.planar_threshold > 0.0)) {
      throw ConfigError(path + ": features.n must be >= 1 and thresholds positive");
    }
  } else {
    p.features.edge_min_prominence = p.features.planar_threshold;
  }

  if (j.contains("association")) {
    const json& ja = j["association"];
    check_keys(ja, {"gate", "kd_leaf_size", "bidirectional", "all_segment_pairs"}, path);
    auto& assoc = p.solver.association;
    assoc.gate = ja.value("gate", assoc.gate);
    assoc.kd_leaf_size = ja.value("kd_leaf_size", assoc.kd_leaf_size);
    assoc.bidirectional = ja.value("bidirectional", assoc.bidirectional);
    assoc.all_segment_pairs = ja.value("all_segment_pairs", assoc.all_segment_pairs);
    if (!(assoc.gate > 0.0)) throw ConfigError(path + ": association.gate must be positive");
  }

  if (j.contains("solver")) {
    const json& js = j["solver"];
    check_keys(js,
               {"max_outer_iterations", "max_lm_iterations", "lm_lambda_init", "lm_lambda_up",
                "lm_lambda_down", "cost_rel_tol", "step_tol", "min_residuals", "robust_loss",
                "huber_delta"},
               path);
    auto& s = p.solver;
    s.max_outer_iterations = js.value("max_outer_iterations", s.max_outer_iterations);
    s.max_lm_iterations = js.value("max_lm_iterations", s.max_lm_iterations);
    s.lm_lambda_init = js.value("lm_lambda_init", s.lm_lambda_init);
    s.lm_lambda_up = js.value("lm_lambda_up", s.lm_lambda_up);
    s.lm_lambda_down = js.value("lm_lambda_down", s.lm_lambda_down);
    s.cost_rel_tol = js.value("cost_rel_tol", s.cost_rel_tol);
    s.step_tol = js.value("step_tol", s.step_tol);
    s.min_residuals = js.value("min_residuals", s.min_residuals);
    s.huber_delta = js.value("huber_delta", s.huber_delta);
    if (js.contains("robust_loss")) {
      const std::string loss = js["robust_loss"].get<std::string>();
      if (loss == "none") s.robust_loss = RobustLoss::None;
      else if (loss == "huber") s.robust_loss = RobustLoss::Huber;
      else throw ConfigError(path + ": robust_loss must be 'none' or 'huber'");
    }
    if (s.max_outer_iterations < 1 || s.max_lm_iterations < 1 || !(s.lm_lambda_init > 0.0)) {
      throw ConfigError(path + ": solver iteration counts and lambda must be positive");
    }
  }

  if (j.contains("dynamics")) {
    const json& jd = j["dynamics"];
    check_keys(jd, {"search_radius", "score_threshold", "down_voxel", "up_voxel",
                    "min_neighbours"},
               path);
    auto& d = config.dynamics;
    d.search_radius = jd.value("search_radius", d.search_radius);
    d.score_threshold = jd.value("score_threshold", d.score_threshold);
    d.down_voxel = jd.value("down_voxel", d.down_voxel);
    d.up_voxel = jd.value("up_voxel", d.up_voxel);
    d.min_neighbours = jd.value("min_neighbours", d.min_neighbours);
    if (!(d.search_radius > 0.0) || !(d.down_voxel > 0.0) || !(d.up_voxel > 0.0)) {
      throw ConfigError(path + ": dynamics sizes must be positive");
    }
  }

  config.pipeline.validate();
  return config;
}

namespace {

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json transform_json(const RigidTransform& t) {
  json j;
  j["rotation_axis_angle"] = vec3_json(so3_log(t.rotation));
  j["translation"] = vec3_json(t.translation);
  return j;
}

RigidTransform transform_from_json(const json& j) {
  RigidTransform t;
  t.rotation = so3_exp(get_vec3(j["rotation_axis_angle"], "states"));
  t.translation = get_vec3(j["translation"], "states");
  return t;
}

}  // namespace

void write_states_json(const std::string& path, const std::vector<WindowRecord>& windows) {
  json j;
  j["windows"] = json::array();
  for (const WindowRecord& w : windows) {
    json jw;
    jw["window_id"] = w.window_id;
    jw["t0"] = w.t_f0;
    jw["t1"] = w.t_f1;
    jw["skipped"] = w.skipped;
    if (w.skipped) {
      jw["reason"] = w.skip_reason;
    } else {
      jw["state"] = {{"accel_bias", vec3_json(w.state.accel_bias)},
                     {"gyro_bias", vec3_json(w.state.gyro_bias)},
                     {"v0", vec3_json(w.state.v0)},
                     {"gravity_dir", json::array({w.state.gravity_alpha, w.state.gravity_beta})},
                     {"gravity", vec3_json(w.state.gravity())}};
      json outer = json::array();
      for (const OuterIterationReport& o : w.report.outer) {
        outer.push_back({{"cost_initial", o.cost_initial},
                         {"cost_final", o.cost_final},
                         {"associations", o.association_count},
                         {"residuals", o.residual_count},
                         {"lm_iterations", o.lm_iterations},
                         {"lm_converged", o.lm_converged}});
      }
      jw["report"] = {{"outer", std::move(outer)},
                      {"converged", w.report.converged},
                      {"total_residuals", w.report.total_residuals},
                      {"message", w.report.message}};
      jw["next_window_transform"] = transform_json(w.next_window_transform);
    }
    j["windows"].push_back(std::move(jw));
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file: " + path);
  out << j.dump(2) << "\n";
}

std::vector<WindowRecord> read_states_json(const std::string& path) {
  const json j = load_json(path);
  std::vector<WindowRecord> out;
  for (const auto& jw : j.at("windows")) {
    WindowRecord w;
    w.window_id = jw.at("window_id").get<int>();
    w.t_f0 = jw.at("t0").get<double>();
    w.t_f1 = jw.at("t1").get<double>();
    w.skipped = jw.at("skipped").get<bool>();
    if (!w.skipped) {
      const json& js = jw.at("state");
      w.state.accel_bias = get_vec3(js.at("accel_bias"), path);
      w.state.gyro_bias = get_vec3(js.at("gyro_bias"), path);
      w.state.v0 = get_vec3(js.at("v0"), path);
      w.state.gravity_alpha = js.at("gravity_dir")[0].get<double>();
      w.state.gravity_beta = js.at("gravity_dir")[1].get<double>();
      w.next_window_transform = transform_from_json(jw.at("next_window_transform"));
    } else {
      w.skip_reason = jw.value("reason", "");
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace limoco::io
