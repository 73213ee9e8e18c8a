// bcdrive: collect -> train -> eval/drive, plus the browser gateway.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "bcdrive/autopilot.hpp"
#include "bcdrive/dataset.hpp"
#include "bcdrive/errors.hpp"
#include "bcdrive/nn.hpp"
#include "bcdrive/sim.hpp"
#include "bcdrive/trainer.hpp"

#ifdef BCDRIVE_WITH_GATEWAY
#include "bcdrive/gateway.hpp"
#endif

namespace fs = std::filesystem;
using namespace bcdrive;

namespace {

template <typename T>
void echo(const std::string& key, const T& value) {
  std::cout << key << '=' << value << '\n';
}

void echo_camera(const CameraSpec& c) {
  echo("camera.resolution", c.resolution);
  echo("camera.near_offset", c.near_offset);
  echo("camera.window_side", c.window_side);
}

void add_camera_flags(CLI::App* app, CameraSpec& c) {
  app->add_option("--resolution", c.resolution, "Camera frame side in pixels")->capture_default_str();
  app->add_option("--near-offset", c.near_offset, "Meters from the car to the window's near edge")
      ->capture_default_str();
  app->add_option("--window-side", c.window_side, "Meters covered by the camera window")
      ->capture_default_str();
}

std::string histogram_text(const std::array<std::size_t, 3>& c) {
  return "left=" + std::to_string(c[0]) + " straight=" + std::to_string(c[1]) +
         " right=" + std::to_string(c[2]);
}

void require_checkpoint_matches(const NetworkParams& params, const fs::path& data_dir,
                                const Manifest& manifest, const fs::path& model) {
  if (manifest.samples.empty()) return;
  const Frame first = read_frame(manifest.resolve(manifest.samples.front()));
  if (first.dims() != std::vector<std::size_t>{1, params.arch.input_height, params.arch.input_width}) {
    throw ContractError("model " + model.string() + " expects " +
                        std::to_string(params.arch.input_width) + "x" +
                        std::to_string(params.arch.input_height) + " frames but " +
                        data_dir.string() + " holds " + first.shape_string() + " images");
  }
}

// --- collect --------------------------------------------------------------

struct CollectArgs {
  std::string mode = "expert";
  std::string track = "default";
  fs::path out = "data";
  CollectOptions opts;
};

int run_collect(const CollectArgs& a) {
  if (a.mode != "expert") {
    throw ContractError("collect supports --mode expert only; use `serve` for manual driving");
  }
  echo("command", "collect");
  echo("mode", a.mode);
  echo("track", a.track);
  echo("steps", a.opts.steps);
  echo("stride", a.opts.stride);
  echo("start_offset", a.opts.start_offset);
  echo("dt", a.opts.dt);
  echo("speed", a.opts.speed);
  echo("turn_rate", a.opts.turn_rate);
  echo("gains.k_offset", a.opts.gains.k_offset);
  echo("gains.k_heading", a.opts.gains.k_heading);
  echo("gains.deadband", a.opts.gains.deadband);
  echo_camera(a.opts.camera);
  echo("out", a.out.string());

  const Track track = track_from_name(a.track);
  const Manifest m = collect_expert(track, a.opts, a.out);
  std::cout << "samples " << m.samples.size() << '\n'
            << "classes " << histogram_text(m.class_counts()) << '\n';
  return 0;
}

// --- train ----------------------------------------------------------------

struct TrainArgs {
  fs::path data;
  fs::path out = "model.bcw";
  fs::path report;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> split_seed;
  std::string loss = "mse";
  bool no_shuffle = false;
  TrainConfig cfg;
  ArchitectureConfig arch;
};

int run_train(TrainArgs a) {
  a.cfg.split.shuffle_seed = a.split_seed.value_or(a.seed);
  a.cfg.shuffle_each_epoch = !a.no_shuffle;
  if (a.loss == "mse") {
    a.cfg.loss = LossKind::Mse;
  } else if (a.loss == "ce") {
    a.cfg.loss = LossKind::CrossEntropy;
  } else {
    throw ContractError("unknown --loss '" + a.loss + "' (expected mse or ce)");
  }
  if (a.report.empty()) a.report = fs::path(a.out).replace_extension(".report.csv");

  const Manifest m = read_manifest(a.data / kManifestName);
  if (m.samples.empty()) throw ContractError("dataset " + a.data.string() + " is empty");
  const Frame first = read_frame(m.resolve(m.samples.front()));
  a.arch.input_height = first.dims()[1];
  a.arch.input_width = first.dims()[2];
  a.arch.validate();
  a.cfg.validate();

  echo("command", "train");
  echo("data", a.data.string());
  echo("samples", m.samples.size());
  echo("epochs", a.cfg.epochs);
  echo("batch", a.cfg.batch_size);
  echo("seed", a.seed);
  echo("split_seed", a.cfg.split.shuffle_seed);
  echo("train_fraction", a.cfg.split.train_fraction);
  echo("learning_rate", a.cfg.adam.learning_rate);
  echo("beta1", a.cfg.adam.beta1);
  echo("beta2", a.cfg.adam.beta2);
  echo("epsilon", a.cfg.adam.epsilon);
  echo("loss", a.loss);
  echo("augment", a.cfg.augment);
  echo("shuffle_each_epoch", a.cfg.shuffle_each_epoch);
  std::string arch_text = a.arch.to_text();
  for (std::size_t pos = 0; (pos = arch_text.find('\n', pos)) != std::string::npos;) {
    arch_text.replace(pos, 1, " ");
  }
  echo("arch", arch_text);
  echo("out", a.out.string());
  echo("report", a.report.string());

  const TrainResult r = train(m, a.arch, a.cfg, a.seed);
  save_checkpoint(r.params, a.out);
  write_report(r.report, a.report);
  std::cout << "train_size " << r.report.train_size << '\n'
            << "test_size " << r.report.test_size << '\n'
            << "final_loss " << r.report.epoch_loss.back() << '\n'
            << "train_accuracy " << r.report.train_accuracy << '\n'
            << "test_accuracy " << r.report.test_accuracy << '\n';
  return 0;
}

// --- eval -----------------------------------------------------------------

struct EvalArgs {
  fs::path model;
  fs::path data;
  bool split_test = false;
  std::uint64_t seed = 1;
  double train_fraction = 0.8;
};

int run_eval(const EvalArgs& a) {
  echo("command", "eval");
  echo("model", a.model.string());
  echo("data", a.data.string());
  echo("split_test", a.split_test);
  if (a.split_test) {
    echo("seed", a.seed);
    echo("train_fraction", a.train_fraction);
  }
  const NetworkParams params = load_checkpoint(a.model);
  Manifest m = read_manifest(a.data / kManifestName);
  if (a.split_test) m = split(m, SplitSpec{a.train_fraction, a.seed}).test;
  require_checkpoint_matches(params, a.data, m, a.model);

  const Evaluation ev = evaluate(params, m);
  std::cout << "samples " << ev.total << '\n' << "accuracy " << ev.accuracy << '\n';
  std::cout << "confusion (rows true, cols predicted: left straight right)\n";
  static const char* names[] = {"left", "straight", "right"};
  for (std::size_t t = 0; t < 3; ++t) {
    std::cout << names[t];
    for (std::size_t p = 0; p < 3; ++p) std::cout << ' ' << ev.confusion[t][p];
    std::cout << '\n';
  }
  return 0;
}

// --- drive ----------------------------------------------------------------

struct DriveArgs {
  fs::path model;
  std::string track = "default";
  double start_offset = 0.0;
  double speed = 1.0;
  fs::path trajectory = "trajectory.csv";
  CameraSpec camera;
  DriveOptions opts;
};

int run_drive(const DriveArgs& a) {
  echo("command", "drive");
  echo("model", a.model.string());
  echo("track", a.track);
  echo("steps", a.opts.steps);
  echo("start_offset", a.start_offset);
  echo("speed", a.speed);
  echo("dt", a.opts.dt);
  echo("turn_rate", a.opts.turn_rate);
  echo("fallback", a.opts.expert_fallback);
  echo_camera(a.camera);
  echo("trajectory", a.trajectory.string());

  a.camera.validate();
  const NetworkParams params = load_checkpoint(a.model);
  const Track track = track_from_name(a.track);
  const DriveResult r =
      run_closed_loop(params, track, a.camera, start_state(track, a.start_offset, a.speed), a.opts);
  write_trajectory_csv(r.trajectory, a.trajectory);
  std::cout << format_drive_report(r.report);
  return 0;
}

// --- serve ----------------------------------------------------------------

#ifdef BCDRIVE_WITH_GATEWAY
std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct ServeArgs {
  std::string bind = "127.0.0.1:8080";
  std::string mode = "manual";
  SimulationConfig sim;
  double tick_hz = 20.0;
};

ServerConfig parse_bind(const std::string& text, double tick_hz) {
  ServerConfig cfg;
  cfg.tick_hz = tick_hz;
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    cfg.bind_address = text;
    return cfg;
  }
  cfg.bind_address = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(port, &used);
    if (used != port.size() || v > 65535) throw std::out_of_range(port);
    cfg.port = static_cast<unsigned short>(v);
  } catch (const std::logic_error&) {
    throw ContractError("invalid port in --bind '" + text + "'");
  }
  return cfg;
}

int run_serve(ServeArgs a) {
  a.sim.mode = parse_mode(a.mode);
  const ServerConfig server_cfg = parse_bind(a.bind, a.tick_hz);
  echo("command", "serve");
  echo("bind", server_cfg.bind_address + ":" + std::to_string(server_cfg.port));
  echo("mode", to_string(a.sim.mode));
  echo("track", a.sim.track_name);
  echo("out", a.sim.out_dir.string());
  echo("model", a.sim.model_path.string());
  echo("tick_hz", server_cfg.tick_hz);
  echo("dt", a.sim.dt);
  echo_camera(a.sim.camera);

  GatewayServer server(a.sim, server_cfg);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.start();
  std::cout << "listening on " << server_cfg.bind_address << ':' << server.port() << std::endl;
  while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  std::cout << "stopped; recorded " << server.simulation().recorded_samples() << " samples"
            << std::endl;
  return 0;
}
#endif

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavioral-cloning driving pipeline"};
  app.require_subcommand(1);

  CollectArgs collect;
  auto* c = app.add_subcommand("collect", "Record an expert-driven run as a dataset");
  c->add_option("--mode", collect.mode, "Demonstrator (expert)")->capture_default_str();
  c->add_option("--track", collect.track, "default or random:<seed>")->capture_default_str();
  c->add_option("--steps", collect.opts.steps, "Frames to record")->capture_default_str();
  c->add_option("--stride", collect.opts.stride, "Simulation steps per recorded frame")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c->add_option("--start-offset", collect.opts.start_offset, "Lateral start offset in meters")
      ->capture_default_str();
  c->add_option("--dt", collect.opts.dt, "Simulation step in seconds")->capture_default_str();
  c->add_option("--speed", collect.opts.speed, "Car speed in m/s")->capture_default_str();
  c->add_option("--k-offset", collect.opts.gains.k_offset)->capture_default_str();
  c->add_option("--k-heading", collect.opts.gains.k_heading)->capture_default_str();
  c->add_option("--deadband", collect.opts.gains.deadband)->capture_default_str();
  c->add_option("--out", collect.out, "Output dataset directory")->capture_default_str();
  add_camera_flags(c, collect.opts.camera);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a checkpoint on a dataset");
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--epochs", tr.cfg.epochs)->capture_default_str();
  t->add_option("--batch", tr.cfg.batch_size)->capture_default_str();
  t->add_option("--seed", tr.seed, "Seed for init, split and batch order")->capture_default_str();
  t->add_option("--split-seed", tr.split_seed, "Split seed (defaults to --seed)");
  t->add_option("--train-fraction", tr.cfg.split.train_fraction)->capture_default_str();
  t->add_option("--lr", tr.cfg.adam.learning_rate)->capture_default_str();
  t->add_option("--loss", tr.loss, "mse or ce")->capture_default_str();
  t->add_flag("--augment", tr.cfg.augment, "Add mirrored copies of training frames");
  t->add_flag("--no-shuffle", tr.no_shuffle, "Keep batch order fixed across epochs");
  t->add_option("--filters", tr.arch.conv_filters)->capture_default_str();
  t->add_option("--kernel", tr.arch.conv_kernel)->capture_default_str();
  t->add_option("--dense1", tr.arch.dense1_units)->capture_default_str();
  t->add_option("--dense2", tr.arch.dense2_units)->capture_default_str();
  t->add_option("--out", tr.out, "Checkpoint path")->capture_default_str();
  t->add_option("--report", tr.report, "Report path (defaults next to the checkpoint)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  e->add_option("--model", ev.model)->required();
  e->add_option("--data", ev.data)->required();
  e->add_flag("--split-test", ev.split_test, "Evaluate only the held-out split");
  e->add_option("--seed", ev.seed, "Split seed")->capture_default_str();
  e->add_option("--train-fraction", ev.train_fraction)->capture_default_str();

  DriveArgs dr;
  auto* d = app.add_subcommand("drive", "Drive the simulator with a checkpoint");
  d->add_option("--model", dr.model)->required();
  d->add_option("--track", dr.track)->capture_default_str();
  d->add_option("--steps", dr.opts.steps)->capture_default_str();
  d->add_flag("--fallback", dr.opts.expert_fallback, "Let the expert steer when off the road");
  d->add_option("--start-offset", dr.start_offset)->capture_default_str();
  d->add_option("--speed", dr.speed)->capture_default_str();
  d->add_option("--dt", dr.opts.dt)->capture_default_str();
  d->add_option("--trajectory", dr.trajectory, "Trajectory CSV path")->capture_default_str();
  add_camera_flags(d, dr.camera);

#ifdef BCDRIVE_WITH_GATEWAY
  ServeArgs sv;
  auto* s = app.add_subcommand("serve", "Run the browser gateway until interrupted");
  s->add_option("--bind", sv.bind, "host:port")->capture_default_str();
  s->add_option("--mode", sv.mode, "manual, expert or autonomous")->capture_default_str();
  s->add_option("--out", sv.sim.out_dir, "Recording directory");
  s->add_option("--model", sv.sim.model_path, "Checkpoint for autonomous mode");
  s->add_option("--track", sv.sim.track_name)->capture_default_str();
  s->add_option("--tick-hz", sv.tick_hz)->capture_default_str();
  s->add_option("--dt", sv.sim.dt)->capture_default_str();
  add_camera_flags(s, sv.sim.camera);
#endif

  CLI11_PARSE(app, argc, argv);

  try {
    if (c->parsed()) return run_collect(collect);
    if (t->parsed()) return run_train(tr);
    if (e->parsed()) return run_eval(ev);
    if (d->parsed()) return run_drive(dr);
#ifdef BCDRIVE_WITH_GATEWAY
    if (s->parsed()) return run_serve(sv);
#endif
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 2;
}
