#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "bcdrive/nn.hpp"
#include "bcdrive/rng.hpp"

namespace bcdrive::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("bcdrive_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Tensor random_tensor(std::vector<std::size_t> dims, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(dims));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Random weights and non-zero biases so every parameter path carries signal.
inline NetworkParams random_params(const ArchitectureConfig& arch, std::uint64_t seed) {
  NetworkParams p = init_params(arch, seed);
  Rng rng(mix_seed(seed, 77));
  for (Tensor* b : {&p.weights.conv_b, &p.weights.dense1_b, &p.weights.dense2_b, &p.weights.out_b}) {
    for (double& v : b->data()) v = rng.uniform(-0.2, 0.2);
  }
  return p;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t kinks = 0;  // parameters whose +-delta probes straddle a ReLU or pooling switch
  std::string worst;      // block name and index of the worst parameter
};

// Piecewise-linear branch taken by a forward pass: pooling winners and ReLU signs.
inline std::vector<std::size_t> activation_pattern(const ForwardCache& c) {
  std::vector<std::size_t> out = c.pool_argmax;
  for (const Tensor* t : {&c.dense1_pre, &c.dense2_pre}) {
    for (double v : t->values()) out.push_back(v > 0.0 ? 1 : 0);
  }
  return out;
}

// Central finite differences over every learnable parameter; relative
// error |a-n| / max(|a|, |n|, 1e-8). A parameter whose two probes land on
// different linear pieces has no valid central difference; it is counted in
// `kinks` and left out of max_rel_error.
inline GradCheck finite_difference_check(const NetworkParams& params, const Tensor& frame,
                                         std::size_t label, LossKind loss, double delta = 1e-4) {
  const Tensor target = one_hot(label);
  const ForwardResult fr = forward(params, frame);
  const Gradients analytic =
      backward(params, fr.cache, compute_loss(loss, fr.probs, target).grad);

  GradCheck out;
  NetworkParams probe = params;
  auto probe_blocks = probe.weights.blocks();
  const auto grad_blocks = analytic.blocks();
  for (std::size_t b = 0; b < Weights::kBlockCount; ++b) {
    Tensor& w = *probe_blocks[b];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + delta;
      const ForwardResult fu = forward(probe, frame);
      w[i] = saved - delta;
      const ForwardResult fd = forward(probe, frame);
      w[i] = saved;
      ++out.checked;
      if (activation_pattern(fu.cache) != activation_pattern(fd.cache)) {
        ++out.kinks;
        continue;
      }
      const double up = compute_loss(loss, fu.probs, target).loss;
      const double down = compute_loss(loss, fd.probs, target).loss;
      const double numeric = (up - down) / (2.0 * delta);
      const double a = (*grad_blocks[b])[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst = std::string(Weights::block_names()[b]) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return out;
}

}  // namespace bcdrive::testing
