// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "bcdrive/autopilot.hpp"
#include "bcdrive/trainer.hpp"
#include "support.hpp"

using namespace bcdrive;
using bcdrive::testing::TempDir;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int n, const char* name, bool ok, const std::string& detail) {
  std::printf("criterion %d %-22s %s  %s\n", n, name, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};
constexpr std::uint64_t kHeldOutTrackBase = 1000;

TrainConfig train_config(std::uint64_t seed) {
  TrainConfig cfg;  // 20 epochs, batch 8, 80/20
  cfg.split.shuffle_seed = seed;
  return cfg;
}

bool same_files(const fs::path& a, const fs::path& b) {
  return bcdrive::testing::read_bytes(a) == bcdrive::testing::read_bytes(b);
}

bool same_dataset(const Manifest& a, const Manifest& b) {
  if (a.samples != b.samples) return false;
  if (!same_files(a.base_dir / kManifestName, b.base_dir / kManifestName)) return false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    if (!same_files(a.resolve(a.samples[i]), b.resolve(b.samples[i]))) return false;
  }
  return true;
}

void gradient_oracle() {
  const auto t0 = Clock::now();
  const ArchitectureConfig arch = tiny_architecture();
  double worst = 0.0;
  std::size_t checked = 0, kinks = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(mix_seed(seed, 5));
    const NetworkParams p = bcdrive::testing::random_params(arch, seed);
    const Tensor frame = bcdrive::testing::random_tensor({1, 8, 8}, rng, 0.0, 1.0);
    const auto g = bcdrive::testing::finite_difference_check(p, frame, rng.below(3), LossKind::Mse);
    worst = std::max(worst, g.max_rel_error);
    checked += g.checked;
    kinks += g.kinks;
  }
  const double secs = seconds_since(t0);
  verdict(1, "gradient-oracle", worst <= 1e-4 && secs < 30.0,
          "max_rel_error=" + fmt("%.3g", worst) + " params=" + std::to_string(checked) +
              " kinks_excluded=" + std::to_string(kinks) +
              " time=" + fmt("%.2fs", secs));
}

}  // namespace

int main() {
  std::printf("acceptance: camera resolution=%d near_offset=%.2f window_side=%.2f\n",
              CameraSpec{}.resolution, CameraSpec{}.near_offset, CameraSpec{}.window_side);

  gradient_oracle();

  // Criterion 2: collect 250 expert frames on the default track, train per seed.
  TempDir root("acceptance");
  const Track track = make_default_track();
  const CameraSpec camera;
  CollectOptions copts;
  const Manifest data = collect_expert(track, copts, root / "data");
  const auto counts = data.class_counts();
  std::printf("dataset: %zu frames, left/straight/right = %zu/%zu/%zu\n", data.samples.size(),
              counts[0], counts[1], counts[2]);

  std::vector<TrainResult> models;
  int acc_ok = 0;
  double slowest = 0.0;
  std::string accs;
  for (std::uint64_t seed : kSeeds) {
    const auto t0 = Clock::now();
    models.push_back(train(data, ArchitectureConfig{}, train_config(seed), seed));
    const double secs = seconds_since(t0);
    slowest = std::max(slowest, secs);
    const double acc = models.back().report.test_accuracy;
    if (acc >= 0.85) ++acc_ok;
    std::printf("  seed %llu: train_acc=%.3f test_acc=%.3f time=%.1fs\n",
                static_cast<unsigned long long>(seed), models.back().report.train_accuracy, acc, secs);
    accs += fmt("%.3f ", acc);
  }
  verdict(2, "pipeline-accuracy", acc_ok >= 4 && slowest < 120.0,
          "test_acc>=0.85 for " + std::to_string(acc_ok) + "/5 seeds [" + accs +
              "] slowest=" + fmt("%.1fs", slowest));

  // Criterion 3: each criterion-2 model drives 2000 steps from the centerline.
  std::vector<DriveResult> drives;
  int drive_ok = 0;
  double slowest_drive = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto t0 = Clock::now();
    drives.push_back(run_closed_loop(models[i].params, track, camera, start_state(track), DriveOptions{}));
    const double secs = seconds_since(t0);
    slowest_drive = std::max(slowest_drive, secs);
    const DriveReport& r = drives.back().report;
    const bool ok = r.laps_completed >= 1.0 && r.off_track_steps == 0 && secs < 30.0;
    if (ok) ++drive_ok;
    std::printf("  seed %llu: laps=%.2f off_track_steps=%zu max_abs_offset=%.3f time=%.1fs\n",
                static_cast<unsigned long long>(kSeeds[i]), r.laps_completed, r.off_track_steps,
                r.max_abs_offset, secs);
  }
  verdict(3, "closed-loop-clone", drive_ok >= 4,
          std::to_string(drive_ok) + "/5 models lap cleanly, slowest=" + fmt("%.1fs", slowest_drive));

  // Criterion 4: one DAgger round of 500 steps on a held-out random track.
  int dagger_ok = 0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const std::uint64_t seed = kSeeds[i];
    const Track held_out = make_random_track(kHeldOutTrackBase + seed);
    const CarState start = start_state(held_out, 0.3);
    const DriveReport before =
        run_closed_loop(models[i].params, held_out, camera, start, DriveOptions{}).report;

    const fs::path dir = root / ("dagger_" + std::to_string(seed));
    fs::copy(data.base_dir, dir, fs::copy_options::recursive);
    DaggerOptions dopts;
    dopts.start = start;
    dopts.steps = 500;
    const DaggerResult round = dagger_round(models[i].params, held_out, dopts, dir);
    const TrainResult retrained = train(round.aggregated, ArchitectureConfig{}, train_config(seed), seed);
    const DriveReport after =
        run_closed_loop(retrained.params, held_out, camera, start, DriveOptions{}).report;
    const bool ok = after.off_track_steps < before.off_track_steps;
    if (ok) ++dagger_ok;
    std::printf("  seed %llu: track random:%llu off_track_steps %zu -> %zu (recorded %zu%s)\n",
                static_cast<unsigned long long>(seed),
                static_cast<unsigned long long>(kHeldOutTrackBase + seed), before.off_track_steps,
                after.off_track_steps, round.recorded, round.truncated ? ", truncated" : "");
  }
  verdict(4, "dagger-improvement", dagger_ok >= 3,
          std::to_string(dagger_ok) + "/5 seeds strictly reduce off_track_steps");

  // Criterion 5: a second run of every stage is bit-identical.
  {
    const Manifest again = collect_expert(track, copts, root / "data_again");
    const bool data_same = same_dataset(data, again);
    const TrainResult retrain = train(again, ArchitectureConfig{}, train_config(kSeeds[0]), kSeeds[0]);
    const bool ckpt_same = encode_checkpoint(retrain.params) == encode_checkpoint(models[0].params) &&
                           retrain.report == models[0].report;
    const DriveResult redrive =
        run_closed_loop(retrain.params, track, camera, start_state(track), DriveOptions{});
    const bool traj_same = format_trajectory_csv(redrive.trajectory) ==
                           format_trajectory_csv(drives[0].trajectory);
    verdict(5, "determinism", data_same && ckpt_same && traj_same,
            std::string("dataset=") + (data_same ? "same" : "DIFFERENT") +
                " checkpoint=" + (ckpt_same ? "same" : "DIFFERENT") +
                " trajectory=" + (traj_same ? "same" : "DIFFERENT"));
  }

  // Criterion 6: formats.
  {
    std::vector<std::string> broken;
    const Manifest back = read_manifest(data.base_dir / kManifestName);
    if (!(back == data) || parse_manifest(format_manifest(data), "acceptance") != data.samples) {
      broken.push_back("manifest");
    }

    double worst_pixel = 0.0;
    bool pgm_bytes = true;
    bool flip = true;
    Rng rng(6);
    for (int i = 0; i < 50; ++i) {
      const Frame f = bcdrive::testing::random_tensor({1, 64, 64}, rng, 0.0, 1.0);
      const auto bytes = encode_pgm(f);
      const Frame g = decode_pgm(bytes);
      for (std::size_t k = 0; k < f.size(); ++k) worst_pixel = std::max(worst_pixel, std::abs(f[k] - g[k]));
      pgm_bytes = pgm_bytes && encode_pgm(g) == bytes;
    }
    for (const Sample& s : data.samples) {
      const Frame f = read_frame(data.resolve(s));
      const auto once = augment_flip(f, s.label);
      const auto twice = augment_flip(once.first, once.second);
      flip = flip && twice.first == f && twice.second == s.label && once.second == negate(s.label);
      pgm_bytes = pgm_bytes && encode_pgm(f) == bcdrive::testing::read_bytes(data.resolve(s));
    }
    if (worst_pixel > 1.0 / 255.0 || !pgm_bytes) broken.push_back("pgm");
    if (!flip) broken.push_back("flip");

    bool split_ok = true;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const SplitResult parts = split(data, {0.8, seed});
      std::vector<Sample> joined = parts.train.samples;
      joined.insert(joined.end(), parts.test.samples.begin(), parts.test.samples.end());
      auto key = [](const Sample& a, const Sample& b) { return a.image_path < b.image_path; };
      std::sort(joined.begin(), joined.end(), key);
      std::vector<Sample> all = data.samples;
      std::sort(all.begin(), all.end(), key);
      split_ok = split_ok && joined == all && parts.train.samples.size() == 200 &&
                 parts.test.samples.size() == 50;
      split_ok = split_ok && split(data, {0.8, seed}).test.samples == parts.test.samples;
    }
    if (!split_ok) broken.push_back("split");

    save_checkpoint(models[0].params, root / "model.bcw");
    const NetworkParams loaded = load_checkpoint(root / "model.bcw");
    bool preds = true;
    for (const Sample& s : data.samples) {
      const Frame f = read_frame(data.resolve(s));
      const Tensor a = predict_probs(models[0].params, f);
      const Tensor b = predict_probs(loaded, f);
      preds = preds && std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
    }
    if (!preds) broken.push_back("checkpoint");

    std::string detail = "max_pixel_error=" + fmt("%.5f", worst_pixel);
    for (const auto& b : broken) detail += " broken:" + b;
    verdict(6, "formats", broken.empty(), detail);
  }

  // Criterion 7: latency at 64x64.
  {
    const LatencyStats s = measure_latency(models[0].params, camera, 500);
    std::printf("latency: mean=%.4f ms p99=%.4f ms over %zu trials\n", s.mean_ms, s.p99_ms,
                s.samples_ms.size());
    verdict(7, "latency-report", s.p99_ms >= s.mean_ms && s.samples_ms.size() == 500,
            "mean=" + fmt("%.4fms", s.mean_ms) + " p99=" + fmt("%.4fms", s.p99_ms));
  }

  std::printf("acceptance: %d of 7 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
