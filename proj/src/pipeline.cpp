#include "limoco/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "limoco/errors.hpp"
#include "limoco/rng.hpp"

namespace limoco {

namespace {

constexpr double kImuSlack = 0.010;   // preintegration coverage slack, seconds
constexpr double kImuMargin = 0.015;  // extra pull beyond the slack

}  // namespace

void PipelineConfig::validate() const {
  if (!(segment_length > 0.0) || !(window_length > 0.0)) {
    throw ConfigError("pipeline: window and segment lengths must be positive");
  }
  const int k = segments();
  if (k < 2) throw ConfigError("pipeline: need at least 2 segments per window");
  if (std::abs(window_length - k * segment_length) > 1e-9) {
    throw ConfigError("pipeline: window_length must be a whole multiple of segment_length");
  }
  if (!(preint_rate > 0.0)) throw ConfigError("pipeline: preint_rate must be positive");
}

WindowState propagate_state(const WindowState& state, const PreintegrationGrid& grid,
                            double t_new) {
  const PreintegratedFactor f = correct_bias(query(grid, t_new), state.biases());
  const double dt = f.t - f.t0;
  const Vec3 g_old = state.gravity();
  const Vec3 v_old_frame = state.v0 + dt * g_old + f.delta_v;

  WindowState out = state;
  out.v0 = f.delta_R.transpose() * v_old_frame;
  out.set_gravity_dir(f.delta_R.transpose() * g_old);
  return out;
}

namespace {

class WindowScheduler {
 public:
  WindowScheduler(PointSource& points, ImuSource& imu, const PipelineConfig& config)
      : points_(points), imu_(imu), config_(config) {}

  // Pulls streams until the window [t_f0, t_f1) plus slack is buffered or
  // the sources end. Returns false when no further window can be formed.
  bool fill(double, double t_f1) {
    while (!points_done_ && lidar_max_t_ < t_f1 + 0.5 * config_.segment_length) {
      if (auto p = points_.next()) {
        lidar_max_t_ = std::max(lidar_max_t_, p->t);
        lidar_.push_back(*p);
      } else {
        points_done_ = true;
      }
    }
    while (!imu_done_ && (imu_buf_.empty() || imu_buf_.back().t < t_f1 + kImuSlack + kImuMargin)) {
      if (auto s = imu_.next()) {
        imu_buf_.push_back(*s);
      } else {
        imu_done_ = true;
      }
    }
    // A trailing window is acceptable when lidar data reaches within half a
    // segment of its end.
    return lidar_max_t_ >= t_f1 - 0.5 * config_.segment_length - 1e-12;
  }

  void drop_before(double t_lidar, double t_imu) {
    while (!lidar_.empty() && lidar_.front().t < t_lidar) lidar_.pop_front();
    while (imu_buf_.size() > 1 && imu_buf_[1].t < t_imu) imu_buf_.pop_front();
  }

  std::vector<LidarPoint> window_points(double t_f0, double t_f1) const {
    std::vector<LidarPoint> out;
    for (const LidarPoint& p : lidar_) {
      if (p.t >= t_f0 && p.t < t_f1) out.push_back(p);
    }
    std::stable_sort(out.begin(), out.end(), [](const LidarPoint& a, const LidarPoint& b) {
      if (a.t != b.t) return a.t < b.t;
      return a.channel < b.channel;
    });
    return out;
  }

  std::vector<ImuSample> window_imu(double t_f0, double t_f1) const {
    std::vector<ImuSample> out;
    for (const ImuSample& s : imu_buf_) {
      if (s.t >= t_f0 - kImuSlack - kImuMargin && s.t <= t_f1 + kImuSlack + kImuMargin) {
        out.push_back(s);
      }
    }
    return out;
  }

  std::optional<LidarPoint> first_point() {
    while (lidar_.empty() && !points_done_) {
      if (auto p = points_.next()) {
        lidar_max_t_ = std::max(lidar_max_t_, p->t);
        lidar_.push_back(*p);
      } else {
        points_done_ = true;
      }
    }
    if (lidar_.empty()) return std::nullopt;
    return lidar_.front();
  }

 private:
  PointSource& points_;
  ImuSource& imu_;
  const PipelineConfig& config_;
  std::deque<LidarPoint> lidar_;
  std::deque<ImuSample> imu_buf_;
  double lidar_max_t_ = -1e300;
  bool points_done_ = false;
  bool imu_done_ = false;
};

// Empty when coverage and spacing are fine, otherwise the skip reason.
std::string check_imu(const std::vector<ImuSample>& imu, double t_f0, double t_f1) {
  if (imu.size() < 2) return "no IMU data in window";
  if (imu.front().t > t_f0 - kImuSlack || imu.back().t < t_f1 + kImuSlack) {
    return "IMU coverage hole";
  }
  std::vector<double> gaps;
  gaps.reserve(imu.size() - 1);
  for (std::size_t i = 1; i < imu.size(); ++i) gaps.push_back(imu[i].t - imu[i - 1].t);
  std::vector<double> sorted = gaps;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  for (double g : gaps) {
    if (g > 2.0 * median + 1e-12) return "IMU stream gap";
  }
  return {};
}

}  // namespace

PipelineSummary run(PointSource& points, ImuSource& imu, const PipelineConfig& config,
                    const std::function<void(const CorrectedCloud&)>& sink) {
  config.validate();
  const auto t_begin = std::chrono::steady_clock::now();

  PipelineSummary summary;
  WindowScheduler sched(points, imu, config);

  const auto first = sched.first_point();
  if (!first) return summary;

  const int k = config.segments();
  double t_f0 = first->t;
  double emitted_up_to = t_f0;
  int window_id = 0;
  std::optional<WindowState> warm;

  while (true) {
    const double t_f1 = t_f0 + config.window_length;
    if (!sched.fill(t_f0, t_f1)) break;

    const auto imu_window = sched.window_imu(t_f0, t_f1);
    const std::string imu_problem = check_imu(imu_window, t_f0, t_f1);
    if (!imu_problem.empty()) {
      summary.skipped.push_back({window_id, t_f0, t_f1, imu_problem});
      warm.reset();  // the preintegration chain is broken
      t_f0 += config.segment_length;
      ++window_id;
      sched.drop_before(t_f0, t_f0 - kImuSlack - kImuMargin);
      continue;
    }

    const auto window_points = sched.window_points(t_f0, t_f1);
    const Window window{t_f0, t_f1, k};

    // Feature extraction per segment so the planar cap applies per segment.
    std::vector<FeaturePoint> features;
    for (int seg = 0; seg < k; ++seg) {
      const double s0 = t_f0 + seg * config.segment_length;
      const double s1 = (seg + 1 == k) ? t_f1 : t_f0 + (seg + 1) * config.segment_length;
      std::vector<LidarPoint> slice;
      for (const LidarPoint& p : window_points) {
        if (p.t >= s0 && p.t < s1) slice.push_back(p);
      }
      FeatureParams fp = config.features;
      fp.seed = splitmix64(config.seed ^ splitmix64(0x77696e00ull + window_id) ^
                           splitmix64(0x73656700ull + seg));
      const auto seg_features = extract_features(slice, fp);
      features.insert(features.end(), seg_features.begin(), seg_features.end());
    }

    SolverParams solver_params = config.solver;
    solver_params.preint_rate = config.preint_rate;

    const WindowState init = warm ? *warm : WindowState::cold_init(imu_window);

    WindowState state;
    SolveReport report;
    try {
      std::tie(state, report) =
          solve_window(features, imu_window, window, config.extrinsic, init, solver_params);
    } catch (const UnderConstrainedError& e) {
      summary.skipped.push_back({window_id, t_f0, t_f1, e.what()});
      warm.reset();
      t_f0 += config.segment_length;
      ++window_id;
      sched.drop_before(t_f0, t_f0 - kImuSlack - kImuMargin);
      continue;
    }

    // Final grid linearised at the solved biases, used for point
    // correction and warm-start propagation.
    const PreintegrationGrid grid =
        preintegrate(imu_window, t_f0, t_f1, config.preint_rate, state.biases());
    const Vec3 gravity = state.gravity();

    CorrectedCloud cloud;
    cloud.window_id = window_id;
    cloud.t_f0 = t_f0;
    cloud.t_f1 = t_f1;
    cloud.state = state;
    cloud.report = report;
    cloud.points.reserve(window_points.size());
    for (const LidarPoint& p : window_points) {
      const RigidTransform pose =
          pose_at(correct_bias(query(grid, p.t), state.biases()), state.v0, gravity);
      cloud.points.push_back({p.t, pose * (config.extrinsic * p.position), p.channel});
    }
    cloud.fresh_begin = std::lower_bound(cloud.points.begin(), cloud.points.end(),
                                         emitted_up_to,
                                         [](const CorrectedPoint& p, double t) {
                                           return p.t < t;
                                         }) -
                        cloud.points.begin();

    const double t_next = t_f0 + config.segment_length;
    const PreintegratedFactor next_factor = correct_bias(query(grid, t_next), state.biases());
    cloud.next_window_transform = pose_at(next_factor, state.v0, gravity);

    sink(cloud);
    ++summary.windows_processed;
    emitted_up_to = t_f1;

    warm = propagate_state(state, grid, t_next);
    t_f0 = t_next;
    ++window_id;
    sched.drop_before(t_f0, t_f0 - kImuSlack - kImuMargin);
  }

  summary.seconds_elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return summary;
}

std::pair<std::vector<CorrectedCloud>, PipelineSummary> run_in_memory(
    std::vector<LidarPoint> points, std::vector<ImuSample> imu,
    const PipelineConfig& config) {
  VectorPointSource point_source(std::move(points));
  VectorImuSource imu_source(std::move(imu));
  std::vector<CorrectedCloud> clouds;
  PipelineSummary summary =
      run(point_source, imu_source, config, [&](const CorrectedCloud& c) { clouds.push_back(c); });
  return {std::move(clouds), std::move(summary)};
}

}  // namespace limoco
