#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "bcdrive/nn.hpp"
#include "bcdrive/sim.hpp"

namespace bcdrive {

/// Levels of the four remote-control lines a hardware backend would drive.
struct LineState {
  bool forward = false;
  bool reverse = false;
  bool left = false;
  bool right = false;

  friend bool operator==(const LineState&, const LineState&) = default;
};

LineState class_to_lines(SteerClass cmd);

struct DriveReport {
  std::size_t steps = 0;
  double laps_completed = 0.0;
  double max_abs_offset = 0.0;
  std::size_t off_track_steps = 0;
  double latency_mean = 0.0;  // ms
  double latency_p99 = 0.0;   // ms
  std::size_t interventions = 0;
  std::array<std::size_t, 3> command_histogram{};  // left/straight/right as issued
};

struct TrajectoryPoint {
  std::size_t step = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  SteerClass cmd = SteerClass::Straight;
  double offset = 0.0;

  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct DriveOptions {
  std::size_t steps = 2000;
  double dt = kDefaultDt;
  double turn_rate = kDefaultTurnRate;
  bool expert_fallback = false;
  ExpertGains gains;  // used only by the fallback
};

struct DriveResult {
  DriveReport report;
  // One point per step, recorded after the step with the command that produced it.
  std::vector<TrajectoryPoint> trajectory;
};

// render -> forward -> argmax -> car_step, once per step.
DriveResult run_closed_loop(const NetworkParams& params, const Track& track,
                            const CameraSpec& camera, const CarState& start,
                            const DriveOptions& opts);

// Same loop driven by the scripted expert; used as a reference.
DriveResult run_expert_loop(const Track& track, const CarState& start, const DriveOptions& opts);

struct LatencyStats {
  double mean_ms = 0.0;
  double p99_ms = 0.0;
  std::vector<double> samples_ms;
};

// Nearest-rank percentile, q in (0, 1].
double percentile(std::vector<double> values, double q);

LatencyStats measure_latency(const NetworkParams& params, const CameraSpec& camera,
                             std::size_t trials);

std::string format_trajectory_csv(const std::vector<TrajectoryPoint>& trajectory);
std::string format_drive_report(const DriveReport& report);
void write_trajectory_csv(const std::vector<TrajectoryPoint>& trajectory,
                          const std::filesystem::path& path);

}  // namespace bcdrive
