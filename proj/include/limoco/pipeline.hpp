// Sliding-window orchestration: fixed-length windows advancing by one
// segment, warm-started states, and emission of motion-corrected points.
// Windows are processed sequentially (warm start); sources are pulled
// incrementally so no more than one window plus slack is buffered.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "limoco/features.hpp"
#include "limoco/geom.hpp"
#include "limoco/preintegration.hpp"
#include "limoco/solver.hpp"
#include "limoco/state.hpp"

namespace limoco {

struct PipelineConfig {
  double window_length = 0.45;   // seconds
  double segment_length = 0.15;  // seconds
  double preint_rate = 1000.0;   // Hz
  RigidTransform extrinsic;      // lidar -> IMU
  FeatureParams features;
  SolverParams solver;
  std::uint64_t seed = 0;

  int segments() const {
    return static_cast<int>(std::lround(window_length / segment_length));
  }

  /// Throws ConfigError unless window_length = K * segment_length with
  /// K >= 2 (within 1e-9) and the rates are positive.
  void validate() const;
};

struct CorrectedPoint {
  double t = 0.0;
  Vec3 position_I0 = Vec3::Zero();
  int channel = 0;
};

struct CorrectedCloud {
  int window_id = 0;
  double t_f0 = 0.0;
  double t_f1 = 0.0;
  std::vector<CorrectedPoint> points;  // all window points, time-ordered
  std::size_t fresh_begin = 0;  // points[fresh_begin..] were not emitted by any earlier window
  WindowState state;
  SolveReport report;
  // Pose of the next window's IMU frame expressed in this window's frame.
  RigidTransform next_window_transform;
};

struct WindowSkip {
  int window_id = 0;
  double t_f0 = 0.0;
  double t_f1 = 0.0;
  std::string reason;
};

struct PipelineSummary {
  int windows_processed = 0;
  std::vector<WindowSkip> skipped;
  double seconds_elapsed = 0.0;
};

class PointSource {
 public:
  virtual ~PointSource() = default;
  virtual std::optional<LidarPoint> next() = 0;
};

class ImuSource {
 public:
  virtual ~ImuSource() = default;
  virtual std::optional<ImuSample> next() = 0;
};

class VectorPointSource : public PointSource {
 public:
  explicit VectorPointSource(std::vector<LidarPoint> points) : points_(std::move(points)) {}
  std::optional<LidarPoint> next() override {
    if (index_ >= points_.size()) return std::nullopt;
    return points_[index_++];
  }

 private:
  std::vector<LidarPoint> points_;
  std::size_t index_ = 0;
};

class VectorImuSource : public ImuSource {
 public:
  explicit VectorImuSource(std::vector<ImuSample> samples) : samples_(std::move(samples)) {}
  std::optional<ImuSample> next() override {
    if (index_ >= samples_.size()) return std::nullopt;
    return samples_[index_++];
  }

 private:
  std::vector<ImuSample> samples_;
  std::size_t index_ = 0;
};

/// Propagates a window state to a new start time inside the grid: velocity
/// and gravity are rotated into the IMU frame at t_new, biases are copied.
WindowState propagate_state(const WindowState& state, const PreintegrationGrid& grid,
                            double t_new);

/// Runs the sliding-window schedule over the streams, invoking the sink for
/// every processed window in order. Skipped windows (IMU gaps or coverage
/// holes, under-constrained solves) are recorded in the summary and do not
/// stop the schedule.
PipelineSummary run(PointSource& points, ImuSource& imu, const PipelineConfig& config,
                    const std::function<void(const CorrectedCloud&)>& sink);

/// Convenience wrapper collecting every corrected cloud.
std::pair<std::vector<CorrectedCloud>, PipelineSummary> run_in_memory(
    std::vector<LidarPoint> points, std::vector<ImuSample> imu,
    const PipelineConfig& config);

}  // namespace limoco
