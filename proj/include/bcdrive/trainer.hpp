#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bcdrive/dataset.hpp"
#include "bcdrive/nn.hpp"
#include "bcdrive/sim.hpp"

namespace bcdrive {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  AdamConfig adam;
  SplitSpec split;
  bool shuffle_each_epoch = true;
  bool augment = false;  // adds a mirrored copy of every training sample
  LossKind loss = LossKind::Mse;

  void validate() const;
};

using ConfusionMatrix = std::array<std::array<std::size_t, 3>, 3>;  // [true][predicted]

struct TrainReport {
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::array<std::size_t, 3> class_counts{};  // whole dataset, left/straight/right
  std::size_t train_size = 0;
  std::size_t test_size = 0;

  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

struct TrainResult {
  NetworkParams params;
  TrainReport report;
};

struct Evaluation {
  double accuracy = 0.0;
  ConfusionMatrix confusion{};
  std::size_t total = 0;
};

// Index batches over [0, count). With shuffle off the order is sequential.
std::vector<std::vector<std::size_t>> make_batches(std::size_t count, std::size_t batch_size,
                                                   std::uint64_t epoch_seed, bool shuffle = true);
std::vector<std::vector<Sample>> make_batches(const Manifest& train, std::size_t batch_size,
                                              std::uint64_t epoch_seed);

// argmax of the class probabilities; ties resolve toward the smaller class.
SteerClass argmax_class(const Tensor& probs);
SteerClass predict_class(const NetworkParams& params, const Frame& frame);

// Loads every image of `manifest`, checking dimensions against `arch`.
std::vector<LabeledFrame> load_frames(const Manifest& manifest, const ArchitectureConfig& arch);

TrainResult train(const Manifest& dataset, const ArchitectureConfig& arch, const TrainConfig& cfg,
                  std::uint64_t seed);

Evaluation evaluate(const NetworkParams& params, const Manifest& manifest);
Evaluation evaluate(const NetworkParams& params, const std::vector<LabeledFrame>& frames);

// "epoch,<n>,loss,<v>" per epoch, then "train_acc,<v>" and "test_acc,<v>".
std::string format_report(const TrainReport& report);
void write_report(const TrainReport& report, const std::filesystem::path& path);

struct CollectOptions {
  CameraSpec camera;
  ExpertGains gains;
  std::size_t steps = 250;   // recorded frames
  std::size_t stride = 3;    // simulation steps between recorded frames
  double start_offset = 0.0; // lateral offset of the start pose, meters
  double speed = 1.0;
  double dt = kDefaultDt;
  double turn_rate = kDefaultTurnRate;

  void validate() const;
};

// Expert-driven rollout recorded into a fresh dataset in `out_dir`.
Manifest collect_expert(const Track& track, const CollectOptions& opts,
                        const std::filesystem::path& out_dir);

struct DaggerOptions {
  CameraSpec camera;
  ExpertGains gains;
  CarState start;
  std::size_t steps = 500;
  double dt = kDefaultDt;
  double turn_rate = kDefaultTurnRate;
};

struct DaggerResult {
  Manifest aggregated;
  std::size_t recorded = 0;
  bool truncated = false;
  std::size_t truncated_at = 0;  // step index where the rollout stopped
};

// Policy that drives the car during a DAgger rollout.
using RolloutPolicy = std::function<SteerClass(const Frame&, const CarState&)>;

// Drives `learner` and records (frame, expert label) for each visited state,
// appending to the dataset in `out_dir`. The rollout stops once the car is
// more than 5 track widths from the centerline.
DaggerResult dagger_round(const RolloutPolicy& learner, const Track& track,
                          const DaggerOptions& opts, const std::filesystem::path& out_dir);
DaggerResult dagger_round(const NetworkParams& params, const Track& track,
                          const DaggerOptions& opts, const std::filesystem::path& out_dir);

}  // namespace bcdrive
