#include <cmath>

#include <doctest.h>

#include "bcdrive/autopilot.hpp"
#include "bcdrive/errors.hpp"
#include "bcdrive/trainer.hpp"
#include "support.hpp"

using namespace bcdrive;

namespace {

CameraSpec small_camera() {
  CameraSpec c;
  c.resolution = 16;
  return c;
}

ArchitectureConfig small_arch() {
  ArchitectureConfig a;
  a.input_height = a.input_width = 16;
  a.conv_filters = 2;
  a.conv_kernel = 3;
  a.dense1_units = 8;
  a.dense2_units = 4;
  return a;
}

NetworkParams zero_params() {
  NetworkParams p;
  p.arch = small_arch();
  p.weights = Weights::zeros(p.arch);
  return p;
}

}  // namespace

TEST_CASE("class_to_lines") {
  CHECK(class_to_lines(SteerClass::Left) == LineState{true, false, true, false});
  CHECK(class_to_lines(SteerClass::Straight) == LineState{true, false, false, false});
  CHECK(class_to_lines(SteerClass::Right) == LineState{true, false, false, true});
}

TEST_SUITE("run_closed_loop") {
  TEST_CASE("uniform model always steers left and circles off the track") {
    const Track t = make_default_track();
    DriveOptions opts;
    opts.steps = 300;
    const DriveResult r = run_closed_loop(zero_params(), t, small_camera(), start_state(t), opts);
    CHECK(r.report.command_histogram == std::array<std::size_t, 3>{300, 0, 0});
    CHECK(r.report.max_abs_offset > t.width() / 2.0);
    CHECK(r.report.off_track_steps > 0);
    // Turning radius 1/1.2 m: the car never gets far from where it started.
    for (const TrajectoryPoint& p : r.trajectory) {
      CHECK(std::hypot(p.x - 0.0, p.y + 3.0) < 2.0 / 1.2 + 0.01);
    }
  }

  TEST_CASE("zero steps gives an empty report") {
    const Track t = make_default_track();
    DriveOptions opts;
    opts.steps = 0;
    const DriveResult r = run_closed_loop(zero_params(), t, small_camera(), start_state(t), opts);
    CHECK(r.trajectory.empty());
    CHECK(r.report.steps == 0);
    CHECK(r.report.laps_completed == 0.0);
    CHECK(r.report.off_track_steps == 0);
    CHECK(r.report.latency_mean == 0.0);
  }

  TEST_CASE("trajectories are deterministic") {
    const Track t = make_random_track(4);
    const NetworkParams p = init_params(small_arch(), 9);
    DriveOptions opts;
    opts.steps = 200;
    const auto a = run_closed_loop(p, t, small_camera(), start_state(t, 0.1), opts);
    const auto b = run_closed_loop(p, t, small_camera(), start_state(t, 0.1), opts);
    CHECK(a.trajectory == b.trajectory);
    CHECK(format_trajectory_csv(a.trajectory) == format_trajectory_csv(b.trajectory));
  }

  TEST_CASE("issued commands are the model argmax at each visited state") {
    const Track t = make_default_track();
    const NetworkParams p = init_params(small_arch(), 21);
    DriveOptions opts;
    opts.steps = 120;
    const CarState start = start_state(t, 0.2);
    const DriveResult r = run_closed_loop(p, t, small_camera(), start, opts);
    CarState s = start;
    std::array<std::size_t, 3> hist{};
    for (const TrajectoryPoint& pt : r.trajectory) {
      const SteerClass want = predict_class(p, render_camera(t, s, small_camera()));
      CHECK(pt.cmd == want);
      ++hist[class_index(want)];
      s = car_step(s, want, opts.dt, opts.turn_rate);
      CHECK(pt.x == s.x);
      CHECK(pt.y == s.y);
    }
    CHECK(r.report.command_histogram == hist);
  }

  TEST_CASE("camera and model resolution must agree") {
    const Track t = make_default_track();
    CHECK_THROWS_AS(run_closed_loop(zero_params(), t, CameraSpec{}, start_state(t), DriveOptions{}),
                    ContractError);
  }

  TEST_CASE("expert fallback takes over off the track") {
    const Track t = make_default_track();
    DriveOptions opts;
    opts.steps = 2000;
    opts.expert_fallback = true;
    const DriveResult r = run_closed_loop(zero_params(), t, small_camera(), start_state(t), opts);
    CHECK(r.report.interventions > 0);
    CHECK(r.report.max_abs_offset < 2.0);
  }
}

TEST_SUITE("run_expert_loop") {
  TEST_CASE("one lap of driving time is about one lap") {
    const Track t = make_default_track();
    DriveOptions opts;
    opts.steps = static_cast<std::size_t>(std::lround(t.total_length() / opts.dt));
    const DriveResult r = run_expert_loop(t, start_state(t), opts);
    CHECK(r.report.laps_completed > 0.97);
    CHECK(r.report.laps_completed < 1.03);
    CHECK(r.report.off_track_steps == 0);
    CHECK(r.report.latency_mean == 0.0);
  }

  TEST_CASE("expert stays on random tracks") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Track t = make_random_track(seed);
      const DriveResult r = run_expert_loop(t, start_state(t, 0.3), DriveOptions{});
      CHECK(r.report.off_track_steps == 0);
      CHECK(r.report.laps_completed > 1.0);
    }
  }
}

TEST_SUITE("latency") {
  TEST_CASE("percentile is nearest rank") {
    CHECK(percentile({}, 0.5) == 0.0);
    CHECK(percentile({5.0}, 0.99) == 5.0);
    CHECK(percentile({4.0, 1.0, 3.0, 2.0}, 0.5) == 2.0);
    CHECK(percentile({4.0, 1.0, 3.0, 2.0}, 0.75) == 3.0);
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(i);
    CHECK(percentile(v, 0.99) == 99.0);
    CHECK(percentile(v, 1.0) == 100.0);
  }

  TEST_CASE("p99 is never below the mean") {
    const LatencyStats s = measure_latency(init_params(small_arch(), 1), small_camera(), 10);
    CHECK(s.samples_ms.size() == 10);
    CHECK(s.p99_ms >= s.mean_ms);
    CHECK(s.mean_ms > 0.0);
    CHECK_THROWS_AS(measure_latency(init_params(small_arch(), 1), small_camera(), 9), ContractError);
  }
}

TEST_SUITE("output formats") {
  TEST_CASE("trajectory csv") {
    const std::vector<TrajectoryPoint> pts{{0, 1.5, -3.0, 0.25, SteerClass::Right, -0.125}};
    CHECK(format_trajectory_csv(pts) == "step,x,y,heading,cmd,offset\n0,1.5,-3,0.25,1,-0.125\n");
    CHECK(format_trajectory_csv({}) == "step,x,y,heading,cmd,offset\n");
  }

  TEST_CASE("drive report lists every field") {
    DriveReport r;
    r.steps = 3;
    r.command_histogram = {1, 1, 1};
    const std::string text = format_drive_report(r);
    for (const char* key : {"steps,3", "laps_completed,0", "off_track_steps,0", "latency_p99,0",
                            "interventions,0", "cmd_left,1", "cmd_right,1"}) {
      CHECK(text.find(key) != std::string::npos);
    }
  }

  TEST_CASE("trajectory file") {
    bcdrive::testing::TempDir dir("traj");
    write_trajectory_csv({}, dir / "t.csv");
    CHECK(bcdrive::testing::read_text(dir / "t.csv") == "step,x,y,heading,cmd,offset\n");
    CHECK_THROWS_AS(write_trajectory_csv({}, dir / "no" / "such" / "t.csv"), IoError);
  }
}
