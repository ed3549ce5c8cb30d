// File formats: CSV point/IMU/corrected/labelled/truth schemas and the JSON
// documents for scenes, trajectories, sensors, and run configuration.
// Floating-point fields are serialised with 9 significant digits; all
// readers validate headers and report line numbers on errors.

#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "limoco/dynamics.hpp"
#include "limoco/pipeline.hpp"
#include "limoco/simulator.hpp"

namespace limoco::io {

struct CorrectedRow {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  int channel = 0;
  int window_id = 0;
};

struct LabelledRow {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  double score = 0.0;
  DynamicLabel label = DynamicLabel::Unknown;
};

struct TruthRow {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  double score = 0.0;
  DynamicLabel label = DynamicLabel::Static;
  int body_id = -1;
};

std::string label_to_string(DynamicLabel label);
DynamicLabel label_from_string(const std::string& s);

// points CSV: t,x,y,z,channel
void write_points_csv(const std::string& path, const std::vector<LidarPoint>& points);
std::vector<LidarPoint> read_points_csv(const std::string& path);

// imu CSV: t,ax,ay,az,wx,wy,wz
void write_imu_csv(const std::string& path, const std::vector<ImuSample>& samples);
std::vector<ImuSample> read_imu_csv(const std::string& path);

// corrected CSV: t,x,y,z,channel,window_id
void write_corrected_csv(const std::string& path, const std::vector<CorrectedRow>& rows);
std::vector<CorrectedRow> read_corrected_csv(const std::string& path);

// labelled CSV: t,x,y,z,score,label
void write_labelled_csv(const std::string& path, const std::vector<LabelledRow>& rows);
std::vector<LabelledRow> read_labelled_csv(const std::string& path);

// truth CSV: t,x,y,z,score,label,body_id
void write_truth_csv(const std::string& path, const std::vector<TruthRow>& rows);
std::vector<TruthRow> read_truth_csv(const std::string& path);

/// Reads the x,y,z columns of any of the CSV schemas above.
std::vector<Vec3> read_xyz_csv(const std::string& path);

/// Streaming CSV sources for the pipeline (one row buffered at a time).
class CsvPointSource : public PointSource {
 public:
  explicit CsvPointSource(const std::string& path);
  ~CsvPointSource() override;
  std::optional<LidarPoint> next() override;

 private:
  std::FILE* file_ = nullptr;
  std::string path_;
  long line_ = 1;
};

class CsvImuSource : public ImuSource {
 public:
  explicit CsvImuSource(const std::string& path);
  ~CsvImuSource() override;
  std::optional<ImuSample> next() override;

 private:
  std::FILE* file_ = nullptr;
  std::string path_;
  long line_ = 1;
};

// JSON documents. All loaders reject unknown keys.
Scene load_scene(const std::string& path);
TrajectorySpec load_trajectory(const std::string& path);
void load_sensors(const std::string& path, LidarSpec& lidar, ImuSpec& imu);

struct RunConfig {
  PipelineConfig pipeline;
  DynamicsParams dynamics;
};

RunConfig load_config(const std::string& path);

// Per-window solver states, cost traces, and the boundary transform to the
// next window's frame (states JSON written by the undistort command).
struct WindowRecord {
  int window_id = 0;
  double t_f0 = 0.0;
  double t_f1 = 0.0;
  bool skipped = false;
  std::string skip_reason;
  WindowState state;
  SolveReport report;
  RigidTransform next_window_transform;
};

void write_states_json(const std::string& path, const std::vector<WindowRecord>& windows);
std::vector<WindowRecord> read_states_json(const std::string& path);

}  // namespace limoco::io
