// Command implementations behind the limoco binary. Each returns a process
// exit code: 0 success, 1 usage/config error, 2 data error, 3 partial
// success (some windows skipped).

#pragma once

#include <cstdint>
#include <string>

namespace limoco::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitPartial = 3;

/// scene/trajectory/sensor JSON -> points.csv, imu.csv, truth.csv in out_dir.
int cmd_simulate(const std::string& scene_json, const std::string& traj_json,
                 const std::string& sensors_json, const std::string& out_dir,
                 std::uint64_t seed);

/// points.csv + imu.csv + config.json -> corrected.csv, states.json in out_dir.
int cmd_undistort(const std::string& points_csv, const std::string& imu_csv,
                  const std::string& config_json, const std::string& out_dir);

/// corrected.csv + config.json -> labelled CSV. When states_json (from the
/// undistort step) is given, each window is classified with its full
/// three-segment context, rebuilt from neighbouring windows through the
/// recorded boundary transforms; otherwise windows are classified from
/// their own rows alone.
int cmd_detect(const std::string& corrected_csv, const std::string& config_json,
               const std::string& out_csv, const std::string& states_json = {});

/// Metric reports. mode is one of:
///   classification  pred = labelled CSV, second = truth CSV
///   map             pred = any CSV with x,y,z columns, second = reference map
///   double-wall     pred = corrected CSV, second unused
int cmd_evaluate(const std::string& pred_csv, const std::string& second_csv,
                 const std::string& mode, const std::string& out_json,
                 double range_gate = 20.0, double fraction = 0.75);

/// Utility: any CSV with x,y,z columns -> ASCII PLY.
int cmd_export_ply(const std::string& csv_path, const std::string& ply_path);

}  // namespace limoco::cli
