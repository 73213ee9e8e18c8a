#include <json.hpp>

#include "bcdrive/errors.hpp"
#include "bcdrive/gateway.hpp"
#include "bcdrive/trainer.hpp"

namespace bcdrive {

namespace fs = std::filesystem;

Simulation::Simulation(SimulationConfig cfg)
    : cfg_(std::move(cfg)), track_(track_from_name(cfg_.track_name)), mode_(cfg_.mode) {
  cfg_.camera.validate();
  if (!(cfg_.dt > 0.0)) throw ContractError("simulation dt must be positive");
  if (!cfg_.model_path.empty()) {
    if (!fs::is_regular_file(cfg_.model_path)) {
      throw ContractError("model file not found: " + cfg_.model_path.string());
    }
    model_ = load_checkpoint(cfg_.model_path);
    const auto res = static_cast<std::size_t>(cfg_.camera.resolution);
    if (model_->arch.input_height != res || model_->arch.input_width != res) {
      throw ContractError("model " + cfg_.model_path.string() + " expects " +
                          std::to_string(model_->arch.input_width) + "x" +
                          std::to_string(model_->arch.input_height) +
                          " frames, camera renders " + std::to_string(res));
    }
  }
  if (mode_ == DriveMode::Autonomous && !model_) {
    throw ContractError("AUTONOMOUS mode requires a model");
  }
  if (!cfg_.out_dir.empty() && fs::exists(cfg_.out_dir / kManifestName)) {
    throw ContractError("refusing to record into " + cfg_.out_dir.string() +
                        ": it already holds " + kManifestName);
  }
  car_ = start_state(track_, 0.0, cfg_.speed);

  std::lock_guard lock(mutex_);
  const Frame frame = render_camera(track_, car_, cfg_.camera);
  snapshot_.frame = base64_encode(encode_pgm(frame));
  snapshot_.x = car_.x;
  snapshot_.y = car_.y;
  snapshot_.heading = car_.heading;
  snapshot_.offset = track_frame(track_, {car_.x, car_.y}).cross_track_error;
  snapshot_.mode = mode_;
}

std::uint64_t Simulation::submit(const ControlMessage& msg) {
  std::lock_guard lock(mutex_);
  const std::uint64_t seq = next_seq_++;
  pending_.emplace_back(seq, msg);
  return seq;
}

ControlAck Simulation::apply(std::uint64_t seq, const ControlMessage& msg) {
  ControlAck ack{seq, true, true, {}, step_};
  switch (msg.kind) {
    case ControlKind::Steer:
      if (msg.steer) manual_cmd_ = *msg.steer;
      break;
    case ControlKind::SetMode:
      if (!msg.mode) break;
      if (*msg.mode == DriveMode::Autonomous && !model_) {
        ack.ok = ack.applied = false;
        ack.error = "no model loaded; AUTONOMOUS mode unavailable";
      } else {
        mode_ = *msg.mode;
      }
      break;
    case ControlKind::SetRecording:
      if (!msg.recording) break;
      if (*msg.recording && cfg_.out_dir.empty()) {
        ack.ok = ack.applied = false;
        ack.error = "no output directory configured; recording unavailable";
        break;
      }
      if (*msg.recording && !recorder_) {
        try {
          recorder_.emplace(RunRecorder::create(cfg_.out_dir));
        } catch (const std::exception& e) {
          ack.ok = ack.applied = false;
          ack.error = e.what();
          break;
        }
      }
      recording_ = *msg.recording;
      break;
    case ControlKind::Reset:
      car_ = start_state(track_, 0.0, cfg_.speed);
      manual_cmd_ = SteerClass::Straight;
      break;
  }
  return ack;
}

SteerClass Simulation::choose_command(const Frame& frame) {
  switch (mode_) {
    case DriveMode::Manual: return manual_cmd_;
    case DriveMode::Expert: return expert_policy(track_, car_, cfg_.gains);
    case DriveMode::Autonomous: return predict_class(*model_, frame);
  }
  return SteerClass::Straight;
}

std::vector<ControlAck> Simulation::tick() {
  std::lock_guard lock(mutex_);
  std::vector<ControlAck> acks;
  acks.reserve(pending_.size());

  // Only the last STEER in the window takes effect; every message is acked.
  std::size_t last_steer = pending_.size();
  for (std::size_t i = 0; i < pending_.size(); ++i) {
    if (pending_[i].second.kind == ControlKind::Steer) last_steer = i;
  }
  for (std::size_t i = 0; i < pending_.size(); ++i) {
    const auto& [seq, msg] = pending_[i];
    if (msg.kind == ControlKind::Steer && i != last_steer) {
      acks.push_back({seq, true, false, {}, step_});
      continue;
    }
    acks.push_back(apply(seq, msg));
  }
  pending_.clear();

  const Frame frame = render_camera(track_, car_, cfg_.camera);
  const SteerClass cmd = choose_command(frame);
  if (recording_ && recorder_) recorder_->append(frame, cmd);
  car_ = car_step(car_, cmd, cfg_.dt, cfg_.turn_rate);
  last_cmd_ = cmd;
  ++step_;

  TelemetryMessage snap;
  snap.step = step_;
  snap.frame = base64_encode(encode_pgm(render_camera(track_, car_, cfg_.camera)));
  snap.x = car_.x;
  snap.y = car_.y;
  snap.heading = car_.heading;
  snap.offset = track_frame(track_, {car_.x, car_.y}).cross_track_error;
  snap.mode = mode_;
  snap.recording = recording_;
  snap.last_cmd = last_cmd_;
  if (recorder_) snap.dataset_counts = recorder_->manifest().class_counts();
  snapshot_ = std::move(snap);
  return acks;
}

TelemetryMessage Simulation::snapshot() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

std::uint64_t Simulation::step() const {
  std::lock_guard lock(mutex_);
  return step_;
}

std::size_t Simulation::recorded_samples() const {
  std::lock_guard lock(mutex_);
  return recorder_ ? recorder_->manifest().samples.size() : 0;
}

const std::optional<Manifest> Simulation::recorded_manifest() const {
  std::lock_guard lock(mutex_);
  if (!recorder_) return std::nullopt;
  return recorder_->manifest();
}

std::string Simulation::config_json() const {
  std::lock_guard lock(mutex_);
  nlohmann::json j;
  j["track"] = {{"name", cfg_.track_name},
                {"width", track_.width()},
                {"total_length", track_.total_length()},
                {"points", track_.segment_count()}};
  j["camera"] = {{"resolution", cfg_.camera.resolution},
                 {"near_offset", cfg_.camera.near_offset},
                 {"window_side", cfg_.camera.window_side}};
  j["mode"] = to_string(mode_);
  j["dt"] = cfg_.dt;
  j["speed"] = cfg_.speed;
  j["model_loaded"] = model_.has_value();
  j["recording_available"] = !cfg_.out_dir.empty();
  return j.dump();
}

}  // namespace bcdrive
