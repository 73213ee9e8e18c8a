#include "bcdrive/autopilot.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "bcdrive/errors.hpp"
#include "bcdrive/trainer.hpp"

namespace bcdrive {

LineState class_to_lines(SteerClass cmd) {
  return {true, false, cmd == SteerClass::Left, cmd == SteerClass::Right};
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Shared stepping loop. `choose` returns the command for the current state and
// reports whether a model prediction was timed.
DriveResult drive_loop(const Track& track, const CarState& start, const DriveOptions& opts,
                       const std::function<SteerClass(const CarState&, double&)>& choose) {
  DriveResult result;
  DriveReport& rep = result.report;
  result.trajectory.reserve(opts.steps);
  std::vector<double> latencies;
  latencies.reserve(opts.steps);

  const double half_width = track.width() / 2.0;
  const double length = track.total_length();
  CarState state = start;
  double last_arc = track_frame(track, {state.x, state.y}).arc_position;
  double progress = 0.0;

  for (std::size_t step = 0; step < opts.steps; ++step) {
    double latency = -1.0;
    SteerClass cmd = choose(state, latency);
    if (latency >= 0.0) latencies.push_back(latency);
    if (opts.expert_fallback) {
      const TrackFrame here = track_frame(track, {state.x, state.y});
      if (std::abs(here.cross_track_error) > half_width) {
        cmd = expert_policy(track, state, opts.gains);
        ++rep.interventions;
      }
    }
    ++rep.command_histogram[class_index(cmd)];
    state = car_step(state, cmd, opts.dt, opts.turn_rate);

    const TrackFrame tf = track_frame(track, {state.x, state.y});
    double delta = tf.arc_position - last_arc;
    if (delta > length / 2.0) delta -= length;
    if (delta < -length / 2.0) delta += length;
    progress += delta;
    last_arc = tf.arc_position;

    const double off = std::abs(tf.cross_track_error);
    rep.max_abs_offset = std::max(rep.max_abs_offset, off);
    if (off > half_width) ++rep.off_track_steps;
    result.trajectory.push_back({step, state.x, state.y, state.heading, cmd, tf.cross_track_error});
  }
  rep.steps = opts.steps;
  rep.laps_completed = std::max(0.0, progress / length);
  if (!latencies.empty()) {
    rep.latency_mean =
        std::accumulate(latencies.begin(), latencies.end(), 0.0) / static_cast<double>(latencies.size());
    rep.latency_p99 = percentile(latencies, 0.99);
  }
  return result;
}

}  // namespace

DriveResult run_closed_loop(const NetworkParams& params, const Track& track,
                            const CameraSpec& camera, const CarState& start,
                            const DriveOptions& opts) {
  if (static_cast<std::size_t>(camera.resolution) != params.arch.input_height ||
      static_cast<std::size_t>(camera.resolution) != params.arch.input_width) {
    throw ContractError("model expects " + std::to_string(params.arch.input_width) + "x" +
                        std::to_string(params.arch.input_height) + " frames but the camera renders " +
                        std::to_string(camera.resolution) + "x" + std::to_string(camera.resolution));
  }
  return drive_loop(track, start, opts, [&](const CarState& state, double& latency) {
    const Frame frame = render_camera(track, state, camera);
    const auto t0 = Clock::now();
    const Tensor probs = predict_probs(params, frame);
    latency = elapsed_ms(t0);
    if (!probs.all_finite()) {
      throw std::runtime_error("autopilot: model produced non-finite probabilities");
    }
    return argmax_class(probs);
  });
}

DriveResult run_expert_loop(const Track& track, const CarState& start, const DriveOptions& opts) {
  return drive_loop(track, start, opts, [&](const CarState& state, double&) {
    return expert_policy(track, state, opts.gains);
  });
}

LatencyStats measure_latency(const NetworkParams& params, const CameraSpec& camera,
                             std::size_t trials) {
  if (trials < 10) throw ContractError("measure_latency: need at least 10 trials");
  const Track track = make_default_track();
  const Frame frame = render_camera(track, start_state(track), camera);
  LatencyStats stats;
  stats.samples_ms.reserve(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    const auto t0 = Clock::now();
    const Tensor probs = predict_probs(params, frame);
    stats.samples_ms.push_back(elapsed_ms(t0));
    if (!probs.all_finite()) throw std::runtime_error("measure_latency: non-finite output");
  }
  stats.mean_ms = std::accumulate(stats.samples_ms.begin(), stats.samples_ms.end(), 0.0) /
                  static_cast<double>(trials);
  stats.p99_ms = percentile(stats.samples_ms, 0.99);
  return stats;
}

std::string format_trajectory_csv(const std::vector<TrajectoryPoint>& trajectory) {
  std::ostringstream os;
  os << "step,x,y,heading,cmd,offset\n" << std::setprecision(9);
  for (const TrajectoryPoint& p : trajectory) {
    os << p.step << ',' << p.x << ',' << p.y << ',' << p.heading << ',' << to_int(p.cmd) << ','
       << p.offset << '\n';
  }
  return os.str();
}

std::string format_drive_report(const DriveReport& r) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "steps," << r.steps << '\n'
     << "laps_completed," << r.laps_completed << '\n'
     << "max_abs_offset," << r.max_abs_offset << '\n'
     << "off_track_steps," << r.off_track_steps << '\n'
     << "latency_mean," << r.latency_mean << '\n'
     << "latency_p99," << r.latency_p99 << '\n'
     << "interventions," << r.interventions << '\n'
     << "cmd_left," << r.command_histogram[0] << '\n'
     << "cmd_straight," << r.command_histogram[1] << '\n'
     << "cmd_right," << r.command_histogram[2] << '\n';
  return os.str();
}

void write_trajectory_csv(const std::vector<TrajectoryPoint>& trajectory,
                          const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write trajectory " + path.string());
  os << format_trajectory_csv(trajectory);
  if (!os) throw IoError("failed writing trajectory " + path.string());
}

}  // namespace bcdrive
