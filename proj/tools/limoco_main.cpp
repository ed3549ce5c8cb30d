#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "limoco/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"limoco: lidar-inertial motion distortion correction and "
               "dynamic point detection"};
  app.require_subcommand(1);

  std::string scene, traj, sensors, out_dir;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand(
      "simulate", "Generate synthetic lidar/IMU data with ground-truth labels");
  simulate->add_option("scene", scene, "Scene JSON")->required();
  simulate->add_option("trajectory", traj, "Trajectory JSON")->required();
  simulate->add_option("sensors", sensors, "Sensor JSON")->required();
  simulate->add_option("out_dir", out_dir, "Output directory")->required();
  simulate->add_option("--seed", seed, "Noise seed");

  std::string points_csv, imu_csv, config_json;
  auto* undistort =
      app.add_subcommand("undistort", "Correct motion distortion window by window");
  undistort->add_option("points", points_csv, "points CSV")->required();
  undistort->add_option("imu", imu_csv, "IMU CSV")->required();
  undistort->add_option("config", config_json, "Run config JSON")->required();
  undistort->add_option("out_dir", out_dir, "Output directory")->required();

  std::string corrected_csv, out_csv, states_json;
  auto* detect = app.add_subcommand("detect", "Classify corrected points as static/dynamic");
  detect->add_option("corrected", corrected_csv, "corrected CSV")->required();
  detect->add_option("config", config_json, "Run config JSON")->required();
  detect->add_option("out", out_csv, "Labelled output CSV")->required();
  detect->add_option("--states", states_json,
                     "states JSON from undistort (enables full-window context)");

  std::string pred_csv, second_csv, mode, out_json;
  double range_gate = 20.0, fraction = 0.75;
  auto* evaluate = app.add_subcommand("evaluate", "Compute metric reports");
  evaluate->add_option("pred", pred_csv, "Prediction CSV")->required();
  evaluate->add_option("mode", mode, "classification | map | double-wall")->required();
  evaluate->add_option("out", out_json, "Metrics JSON output")->required();
  evaluate->add_option("--against", second_csv, "Truth CSV or reference map CSV");
  evaluate->add_option("--range-gate", range_gate, "Range gate in metres (classification)");
  evaluate->add_option("--fraction", fraction, "Best-match fraction (map)");

  std::string ply_path;
  auto* export_ply = app.add_subcommand("export-ply", "Convert a CSV cloud to ASCII PLY");
  export_ply->add_option("csv", pred_csv, "Input CSV with x,y,z columns")->required();
  export_ply->add_option("ply", ply_path, "Output PLY")->required();

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) {
    return limoco::cli::cmd_simulate(scene, traj, sensors, out_dir, seed);
  }
  if (undistort->parsed()) {
    return limoco::cli::cmd_undistort(points_csv, imu_csv, config_json, out_dir);
  }
  if (detect->parsed()) {
    return limoco::cli::cmd_detect(corrected_csv, config_json, out_csv, states_json);
  }
  if (evaluate->parsed()) {
    if ((mode == "classification" || mode == "map") && second_csv.empty()) {
      std::fprintf(stderr, "error: evaluate mode '%s' needs --against\n", mode.c_str());
      return limoco::cli::kExitConfig;
    }
    return limoco::cli::cmd_evaluate(pred_csv, second_csv, mode, out_json, range_gate,
                                     fraction);
  }
  if (export_ply->parsed()) {
    return limoco::cli::cmd_export_ply(pred_csv, ply_path);
  }
  return limoco::cli::kExitConfig;
}
