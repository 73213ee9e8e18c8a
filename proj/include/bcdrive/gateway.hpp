#pragma once

// Browser-facing simulation loop. `Simulation` is the single authoritative
// state machine and knows nothing about sockets; `GatewayServer` owns one,
// ticks it on a timer and bridges it to HTTP + websocket clients.

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bcdrive/dataset.hpp"
#include "bcdrive/nn.hpp"
#include "bcdrive/sim.hpp"

namespace bcdrive {

enum class DriveMode { Manual, Autonomous, Expert };

std::string to_string(DriveMode mode);
// Accepts "MANUAL", "AUTONOMOUS", "EXPERT" (any case).
DriveMode parse_mode(const std::string& text);

struct TelemetryMessage {
  std::uint64_t step = 0;
  std::string frame;  // base64 of a binary PGM
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double offset = 0.0;
  DriveMode mode = DriveMode::Manual;
  bool recording = false;
  SteerClass last_cmd = SteerClass::Straight;
  std::array<std::size_t, 3> dataset_counts{};  // left/straight/right

  friend bool operator==(const TelemetryMessage&, const TelemetryMessage&) = default;
};

enum class ControlKind { Steer, SetMode, SetRecording, Reset };

struct ControlMessage {
  ControlKind kind = ControlKind::Steer;
  std::optional<SteerClass> steer;
  std::optional<DriveMode> mode;
  std::optional<bool> recording;

  friend bool operator==(const ControlMessage&, const ControlMessage&) = default;
};

// Sent back for every control message, in arrival order.
struct ControlAck {
  std::uint64_t seq = 0;
  bool ok = true;
  bool applied = true;  // false for a STEER superseded within the same tick
  std::string error;
  std::uint64_t tick = 0;  // simulation step the message was handled before
};

// JSON wire format, lower_snake_case keys, "kind" tag on every object.
std::string encode_telemetry(const TelemetryMessage& msg);
TelemetryMessage decode_telemetry(const std::string& json);
std::string encode_control(const ControlMessage& msg);
// Throws FormatError for unknown kinds, missing fields or fields of another kind.
ControlMessage decode_control(const std::string& json);
std::string encode_ack(const ControlAck& ack);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

struct SimulationConfig {
  std::string track_name = "default";
  CameraSpec camera;
  ExpertGains gains;
  double dt = kDefaultDt;
  double speed = 1.0;
  double turn_rate = kDefaultTurnRate;
  DriveMode mode = DriveMode::Manual;
  std::filesystem::path out_dir;    // empty: recording disabled
  std::filesystem::path model_path; // empty: autonomous mode unavailable
};

class Simulation {
 public:
  // Throws ContractError for configs that can never run, e.g. AUTONOMOUS
  // without a model or an output directory that already holds a dataset.
  explicit Simulation(SimulationConfig cfg);

  // Queues a message for the next tick; returns its sequence number.
  std::uint64_t submit(const ControlMessage& msg);

  // Applies queued controls (SET_* in order, only the last STEER), then
  // advances the car one step and records if enabled. Returns the acks of the
  // messages applied in this tick.
  std::vector<ControlAck> tick();

  TelemetryMessage snapshot() const;
  std::uint64_t step() const;
  std::size_t recorded_samples() const;
  std::string config_json() const;
  const std::optional<Manifest> recorded_manifest() const;

 private:
  ControlAck apply(std::uint64_t seq, const ControlMessage& msg);
  SteerClass choose_command(const Frame& frame);

  SimulationConfig cfg_;
  Track track_;
  std::optional<NetworkParams> model_;

  mutable std::mutex mutex_;
  std::vector<std::pair<std::uint64_t, ControlMessage>> pending_;
  std::uint64_t next_seq_ = 1;

  // State below changes only inside tick(), under mutex_.
  CarState car_;
  std::uint64_t step_ = 0;
  DriveMode mode_;
  bool recording_ = false;
  SteerClass manual_cmd_ = SteerClass::Straight;
  SteerClass last_cmd_ = SteerClass::Straight;
  std::optional<RunRecorder> recorder_;
  TelemetryMessage snapshot_;
};

struct ServerConfig {
  std::string bind_address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  double tick_hz = 20.0;
};

class GatewayServer {
 public:
  GatewayServer(SimulationConfig sim, ServerConfig server);
  ~GatewayServer();

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  // Binds and starts the network and tick threads. Throws IoError when the
  // address cannot be bound.
  void start();
  void stop();
  bool running() const noexcept;
  unsigned short port() const noexcept;
  Simulation& simulation() noexcept;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace bcdrive
