#include "limoco/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "limoco/errors.hpp"
#include "limoco/evaluation.hpp"
#include "limoco/io.hpp"
#include "limoco/pipeline.hpp"
#include "limoco/simulator.hpp"

namespace limoco::cli {

namespace {

using nlohmann::json;

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file: " + path);
  out << j.dump(2) << "\n";
}

json optional_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

}  // namespace

int cmd_simulate(const std::string& scene_json, const std::string& traj_json,
                 const std::string& sensors_json, const std::string& out_dir,
                 std::uint64_t seed) {
  return run_guarded([&]() {
    const Scene scene = io::load_scene(scene_json);
    const TrajectorySpec traj = io::load_trajectory(traj_json);
    LidarSpec lidar;
    ImuSpec imu;
    io::load_sensors(sensors_json, lidar, imu);

    std::filesystem::create_directories(out_dir);

    const auto sweep = synth_sweep(traj, scene, lidar, 0.0, traj.duration, seed);
    const auto samples = synth_imu(traj, imu, -imu.padding, traj.duration + imu.padding, seed);

    std::vector<LidarPoint> points;
    std::vector<io::TruthRow> truth;
    points.reserve(sweep.size());
    truth.reserve(sweep.size());
    for (const SweepPoint& sp : sweep) {
      points.push_back(sp.raw);
      truth.push_back({sp.raw.t, sp.true_I0, 0.0,
                       sp.dynamic ? DynamicLabel::Dynamic : DynamicLabel::Static,
                       sp.body_id});
    }

    io::write_points_csv(out_dir + "/points.csv", points);
    io::write_imu_csv(out_dir + "/imu.csv", samples);
    io::write_truth_csv(out_dir + "/truth.csv", truth);
    return kExitOk;
  });
}

int cmd_undistort(const std::string& points_csv, const std::string& imu_csv,
                  const std::string& config_json, const std::string& out_dir) {
  return run_guarded([&]() {
    const io::RunConfig config = io::load_config(config_json);
    std::filesystem::create_directories(out_dir);

    io::CsvPointSource points(points_csv);
    io::CsvImuSource imu(imu_csv);

    std::vector<io::CorrectedRow> rows;
    std::vector<io::WindowRecord> records;
    const PipelineSummary summary =
        run(points, imu, config.pipeline, [&](const CorrectedCloud& cloud) {
          for (std::size_t i = cloud.fresh_begin; i < cloud.points.size(); ++i) {
            const CorrectedPoint& p = cloud.points[i];
            rows.push_back({p.t, p.position_I0, p.channel, cloud.window_id});
          }
          io::WindowRecord rec;
          rec.window_id = cloud.window_id;
          rec.t_f0 = cloud.t_f0;
          rec.t_f1 = cloud.t_f1;
          rec.state = cloud.state;
          rec.report = cloud.report;
          rec.next_window_transform = cloud.next_window_transform;
          records.push_back(std::move(rec));
        });

    for (const WindowSkip& skip : summary.skipped) {
      io::WindowRecord rec;
      rec.window_id = skip.window_id;
      rec.t_f0 = skip.t_f0;
      rec.t_f1 = skip.t_f1;
      rec.skipped = true;
      rec.skip_reason = skip.reason;
      records.push_back(std::move(rec));
      std::cerr << "warning: window " << skip.window_id << " skipped: " << skip.reason << "\n";
    }
    std::sort(records.begin(), records.end(),
              [](const io::WindowRecord& a, const io::WindowRecord& b) {
                return a.window_id < b.window_id;
              });

    io::write_corrected_csv(out_dir + "/corrected.csv", rows);
    io::write_states_json(out_dir + "/states.json", records);

    if (summary.windows_processed == 0 && !summary.skipped.empty()) return kExitData;
    if (!summary.skipped.empty()) return kExitPartial;
    return kExitOk;
  });
}

int cmd_detect(const std::string& corrected_csv, const std::string& config_json,
               const std::string& out_csv, const std::string& states_json) {
  return run_guarded([&]() {
    const io::RunConfig config = io::load_config(config_json);
    const auto rows = io::read_corrected_csv(corrected_csv);

    // Row indices per window, ascending window id.
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < rows.size(); ++i) groups[rows[i].window_id].push_back(i);

    // Chained window poses from the states file: pose of each window's IMU
    // frame in its chain anchor's frame. A skipped window breaks the chain.
    std::map<int, RigidTransform> chain_pose;
    std::map<int, int> chain_anchor;
    std::map<int, io::WindowRecord> record_of;
    if (!states_json.empty()) {
      RigidTransform running;
      int anchor = -1, previous = -1;
      for (const io::WindowRecord& rec : io::read_states_json(states_json)) {
        record_of[rec.window_id] = rec;
        if (rec.skipped) {
          anchor = -1;
          previous = -1;
          continue;
        }
        if (anchor < 0 || rec.window_id != previous + 1) {
          anchor = rec.window_id;
          running = RigidTransform{};
        } else {
          running = running * record_of[previous].next_window_transform;
        }
        chain_pose[rec.window_id] = running;
        chain_anchor[rec.window_id] = anchor;
        previous = rec.window_id;
      }
    }

    std::vector<io::LabelledRow> out(rows.size());
    const int k = config.pipeline.segments();

    for (const auto& [window_id, own_rows] : groups) {
      double t_f0, t_f1;
      if (const auto it = record_of.find(window_id); it != record_of.end()) {
        t_f0 = it->second.t_f0;
        t_f1 = it->second.t_f1;
      } else {
        t_f0 = rows[own_rows.front()].t;
        t_f1 = rows[own_rows.back()].t + 1e-9;
        for (std::size_t i : own_rows) {
          t_f0 = std::min(t_f0, rows[i].t);
          t_f1 = std::max(t_f1, rows[i].t + 1e-9);
        }
      }

      // Context: this window's rows plus, when the chain is known, the
      // earlier windows' rows inside [t_f0, t_f1) re-expressed in this
      // window's frame.
      std::vector<SpacetimePoint> context;
      std::size_t own_offset = 0;
      if (const auto self = chain_pose.find(window_id); self != chain_pose.end()) {
        const RigidTransform to_window = self->second.inverse();
        for (int m = std::max(0, window_id - (k - 1)); m < window_id; ++m) {
          const auto pose_m = chain_pose.find(m);
          if (pose_m == chain_pose.end() ||
              chain_anchor.at(m) != chain_anchor.at(window_id)) {
            continue;
          }
          const auto rows_m = groups.find(m);
          if (rows_m == groups.end()) continue;
          const RigidTransform rel = to_window * pose_m->second;
          for (std::size_t i : rows_m->second) {
            if (rows[i].t >= t_f0 && rows[i].t < t_f1) {
              context.push_back({rel * rows[i].position, rows[i].t});
            }
          }
        }
      }
      own_offset = context.size();
      for (std::size_t i : own_rows) context.push_back({rows[i].position, rows[i].t});

      const auto labelled = classify(context, config.dynamics);
      for (std::size_t j = 0; j < own_rows.size(); ++j) {
        const LabelledPoint& lp = labelled[own_offset + j];
        const io::CorrectedRow& src = rows[own_rows[j]];
        out[own_rows[j]] = {src.t, src.position, lp.score, lp.label};
      }
    }

    io::write_labelled_csv(out_csv, out);
    return kExitOk;
  });
}

int cmd_evaluate(const std::string& pred_csv, const std::string& second_csv,
                 const std::string& mode, const std::string& out_json, double range_gate,
                 double fraction) {
  return run_guarded([&]() {
    json report;
    report["mode"] = mode;

    if (mode == "classification") {
      const auto pred = io::read_labelled_csv(pred_csv);
      const auto truth = io::read_truth_csv(second_csv);

      std::map<double, std::size_t> truth_by_time;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!truth_by_time.emplace(truth[i].t, i).second) {
          throw DataError(second_csv + ": duplicate timestamp in truth");
        }
      }

      ConfusionCounts counts;
      long excluded_unknown = 0, excluded_range = 0;
      for (const io::LabelledRow& p : pred) {
        const auto it = truth_by_time.find(p.t);
        if (it == truth_by_time.end()) {
          throw DataError(pred_csv + ": prediction timestamp missing from truth");
        }
        if (p.position.norm() >= range_gate) {
          ++excluded_range;
          continue;
        }
        if (p.label == DynamicLabel::Unknown) {
          ++excluded_unknown;
          continue;
        }
        const bool truth_dynamic = truth[it->second].label == DynamicLabel::Dynamic;
        const bool pred_dynamic = p.label == DynamicLabel::Dynamic;
        if (pred_dynamic && truth_dynamic) ++counts.tp;
        else if (pred_dynamic) ++counts.fp;
        else if (truth_dynamic) ++counts.fn;
        else ++counts.tn;
      }

      const ClassificationMetrics m = metrics_from_counts(counts);
      report["range_gate"] = range_gate;
      report["counts"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"fn", counts.fn},
                          {"tn", counts.tn}};
      report["excluded_unknown"] = excluded_unknown;
      report["excluded_range"] = excluded_range;
      report["iou"] = optional_json(m.iou);
      report["recall"] = optional_json(m.recall);
      report["precision"] = optional_json(m.precision);
      report["accuracy"] = optional_json(m.accuracy);
      report["f1"] = optional_json(m.f1);
      report["static_false_positive_rate"] =
          (counts.fp + counts.tn) > 0
              ? json(static_cast<double>(counts.fp) / static_cast<double>(counts.fp + counts.tn))
              : json(nullptr);
    } else if (mode == "map") {
      const auto cloud = io::read_xyz_csv(pred_csv);
      const auto reference = io::read_xyz_csv(second_csv);
      report["fraction"] = fraction;
      report["count"] = cloud.size();
      report["mean_best_distance"] = mean_best_distance(cloud, reference, fraction);
    } else if (mode == "double-wall") {
      const auto rows = io::read_corrected_csv(pred_csv);
      std::map<int, std::vector<SpacetimePoint>> windows;
      for (const io::CorrectedRow& r : rows) {
        windows[r.window_id].push_back({r.position, r.t});
      }
      json per_window = json::array();
      double sum = 0.0;
      long defined = 0;
      for (const auto& [id, points] : windows) {
        json jw;
        jw["window_id"] = id;
        try {
          const double gap = double_wall_gap(points);
          jw["gap"] = gap;
          sum += gap;
          ++defined;
        } catch (const NoOverlapError&) {
          jw["gap"] = nullptr;
        }
        per_window.push_back(std::move(jw));
      }
      report["windows"] = std::move(per_window);
      report["mean_gap"] = defined > 0 ? json(sum / static_cast<double>(defined)) : json(nullptr);
    } else {
      throw ConfigError("unknown evaluate mode '" + mode +
                        "' (expected classification, map, or double-wall)");
    }

    write_json_file(out_json, report);
    return kExitOk;
  });
}

int cmd_export_ply(const std::string& csv_path, const std::string& ply_path) {
  return run_guarded([&]() {
    const auto cloud = io::read_xyz_csv(csv_path);
    std::ofstream out(ply_path);
    if (!out) throw DataError("cannot open file: " + ply_path);
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
        << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    char buf[128];
    for (const Vec3& p : cloud) {
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
      out << buf;
    }
    return kExitOk;
  });
}

}  // namespace limoco::cli
