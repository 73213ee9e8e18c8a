#include "bcdrive/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "bcdrive/errors.hpp"
#include "bcdrive/rng.hpp"

namespace bcdrive {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractError("train: epochs must be >= 1");
  if (batch_size < 1) throw ContractError("train: batch_size must be >= 1");
  adam.validate();
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0)) {
    throw ContractError("train: train_fraction must be in (0,1)");
  }
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t count, std::size_t batch_size,
                                                   std::uint64_t epoch_seed, bool shuffle) {
  if (batch_size == 0) throw ContractError("make_batches: batch_size must be >= 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(epoch_seed);
    rng.shuffle(std::span<std::size_t>(order));
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < count; i += batch_size) {
    const std::size_t end = std::min(count, i + batch_size);
    batches.emplace_back(order.begin() + static_cast<long>(i), order.begin() + static_cast<long>(end));
  }
  return batches;
}

std::vector<std::vector<Sample>> make_batches(const Manifest& train, std::size_t batch_size,
                                              std::uint64_t epoch_seed) {
  if (train.samples.empty()) throw ContractError("make_batches: empty training set");
  std::vector<std::vector<Sample>> out;
  for (const auto& idx : make_batches(train.samples.size(), batch_size, epoch_seed)) {
    auto& batch = out.emplace_back();
    for (std::size_t i : idx) batch.push_back(train.samples[i]);
  }
  return out;
}

SteerClass argmax_class(const Tensor& probs) {
  if (probs.size() != 3) throw ShapeError("argmax_class expects 3 probabilities");
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return class_from_index(best);
}

SteerClass predict_class(const NetworkParams& params, const Frame& frame) {
  return argmax_class(predict_probs(params, frame));
}

std::vector<LabeledFrame> load_frames(const Manifest& manifest, const ArchitectureConfig& arch) {
  std::vector<LabeledFrame> frames;
  frames.reserve(manifest.samples.size());
  for (const Sample& s : manifest.samples) {
    const fs::path path = manifest.resolve(s);
    if (!fs::is_regular_file(path)) throw IoError("missing image file " + path.string());
    Frame f = read_frame(path);
    if (f.dim(1) != arch.input_height || f.dim(2) != arch.input_width) {
      throw ContractError("image " + path.string() + " is " + std::to_string(f.dim(2)) + "x" +
                          std::to_string(f.dim(1)) + " but the model expects " +
                          std::to_string(arch.input_width) + "x" +
                          std::to_string(arch.input_height));
    }
    frames.push_back({std::move(f), s.label});
  }
  return frames;
}

Evaluation evaluate(const NetworkParams& params, const std::vector<LabeledFrame>& frames) {
  if (frames.empty()) throw ContractError("evaluate: empty sample set");
  Evaluation e;
  std::size_t correct = 0;
  for (const LabeledFrame& lf : frames) {
    const SteerClass pred = predict_class(params, lf.frame);
    ++e.confusion[class_index(lf.label)][class_index(pred)];
    if (pred == lf.label) ++correct;
  }
  e.total = frames.size();
  e.accuracy = static_cast<double>(correct) / static_cast<double>(e.total);
  return e;
}

Evaluation evaluate(const NetworkParams& params, const Manifest& manifest) {
  return evaluate(params, load_frames(manifest, params.arch));
}

TrainResult train(const Manifest& dataset, const ArchitectureConfig& arch, const TrainConfig& cfg,
                  std::uint64_t seed) {
  arch.validate();
  cfg.validate();
  if (dataset.samples.size() < 2) {
    throw ContractError("train: dataset needs at least 2 samples, got " +
                        std::to_string(dataset.samples.size()));
  }
  SplitSpec split_spec = cfg.split;
  const SplitResult parts = split(dataset, split_spec);
  if (parts.train.samples.empty()) throw ContractError("train: split left no training samples");

  std::vector<LabeledFrame> train_frames = load_frames(parts.train, arch);
  if (cfg.augment) {
    const std::size_t n = train_frames.size();
    for (std::size_t i = 0; i < n; ++i) {
      auto [frame, label] = augment_flip(train_frames[i].frame, train_frames[i].label);
      train_frames.push_back({std::move(frame), label});
    }
  }

  NetworkParams params = init_params(arch, mix_seed(seed, 1));
  TrainReport report;
  report.class_counts = dataset.class_counts();
  report.train_size = parts.train.samples.size();
  report.test_size = parts.test.samples.size();

  Gradients grad_sum = Weights::zeros(arch);
  std::array<Tensor, 3> targets{one_hot(0), one_hot(1), one_hot(2)};
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = make_batches(train_frames.size(), cfg.batch_size,
                                      mix_seed(seed, 1000 + epoch), cfg.shuffle_each_epoch);
    double loss_sum = 0.0;
    for (const auto& batch : batches) {
      for (Tensor* t : grad_sum.blocks()) t->fill(0.0);
      for (std::size_t idx : batch) {
        const LabeledFrame& lf = train_frames[idx];
        const ForwardResult fr = forward(params, lf.frame);
        const LossResult lr = compute_loss(cfg.loss, fr.probs, targets[class_index(lf.label)]);
        loss_sum += lr.loss;
        accumulate_gradients(params, fr.cache, lr.grad, grad_sum);
      }
      const double scale = 1.0 / static_cast<double>(batch.size());
      for (Tensor* t : grad_sum.blocks()) {
        for (double& v : t->data()) v *= scale;
      }
      params = adam_step(params, grad_sum, cfg.adam);
    }
    report.epoch_loss.push_back(loss_sum / static_cast<double>(train_frames.size()));
  }

  // What comes back is exactly what a checkpoint round trip reproduces.
  params = round_to_storage(std::move(params));

  report.train_accuracy = evaluate(params, train_frames).accuracy;
  if (!parts.test.samples.empty()) {
    report.test_accuracy = evaluate(params, load_frames(parts.test, arch)).accuracy;
  }
  return {std::move(params), std::move(report)};
}

std::string format_report(const TrainReport& report) {
  std::ostringstream os;
  os << std::setprecision(10);
  for (std::size_t i = 0; i < report.epoch_loss.size(); ++i) {
    os << "epoch," << (i + 1) << ",loss," << report.epoch_loss[i] << '\n';
  }
  os << "train_acc," << report.train_accuracy << '\n';
  os << "test_acc," << report.test_accuracy << '\n';
  return os.str();
}

void write_report(const TrainReport& report, const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write report " + path.string());
  os << format_report(report);
  if (!os) throw IoError("failed writing report " + path.string());
}

void CollectOptions::validate() const {
  camera.validate();
  if (stride == 0) throw ContractError("collect stride must be at least 1");
  if (!(dt > 0.0)) throw ContractError("collect dt must be positive");
  if (!(speed > 0.0)) throw ContractError("collect speed must be positive");
}

Manifest collect_expert(const Track& track, const CollectOptions& opts, const fs::path& out_dir) {
  opts.validate();
  RunRecorder rec = RunRecorder::create(out_dir);
  CarState state = start_state(track, opts.start_offset, opts.speed);
  for (std::size_t i = 0; i < opts.steps; ++i) {
    rec.append(render_camera(track, state, opts.camera), expert_policy(track, state, opts.gains));
    for (std::size_t k = 0; k < opts.stride; ++k) {
      state = car_step(state, expert_policy(track, state, opts.gains), opts.dt, opts.turn_rate);
    }
  }
  return rec.manifest();
}

DaggerResult dagger_round(const RolloutPolicy& learner, const Track& track,
                          const DaggerOptions& opts, const fs::path& out_dir) {
  RunRecorder rec = fs::exists(out_dir / kManifestName) ? RunRecorder::append_to(out_dir)
                                                        : RunRecorder::create(out_dir);
  DaggerResult result;
  const double limit = 5.0 * track.width();
  CarState state = opts.start;
  for (std::size_t step = 0; step < opts.steps; ++step) {
    const TrackFrame tf = track_frame(track, {state.x, state.y});
    if (std::abs(tf.cross_track_error) > limit) {
      result.truncated = true;
      result.truncated_at = step;
      break;
    }
    const Frame frame = render_camera(track, state, opts.camera);
    const SteerClass label = expert_policy(track, state, opts.gains);
    rec.append(frame, label);
    ++result.recorded;
    state = car_step(state, learner(frame, state), opts.dt, opts.turn_rate);
  }
  result.aggregated = rec.manifest();
  return result;
}

DaggerResult dagger_round(const NetworkParams& params, const Track& track,
                          const DaggerOptions& opts, const fs::path& out_dir) {
  return dagger_round(
      [&params](const Frame& frame, const CarState&) { return predict_class(params, frame); },
      track, opts, out_dir);
}

}  // namespace bcdrive
