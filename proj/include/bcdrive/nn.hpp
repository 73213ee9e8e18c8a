#pragma once

// Network math for the steering classifier:
//
//   frame [1,H,W] -> conv KxK (F filters) -> ELU -> maxpool 2x2 -> flatten
//                 -> dense/ReLU -> dense/ReLU -> dense/softmax [3]
//
// Everything is computed in double precision and every function is a pure
// function of its arguments.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bcdrive/tensor.hpp"

namespace bcdrive {

struct ArchitectureConfig {
  std::size_t input_height = 64;
  std::size_t input_width = 64;
  std::size_t conv_filters = 8;
  std::size_t conv_kernel = 5;
  std::size_t pool = 2;
  std::size_t dense1_units = 64;
  std::size_t dense2_units = 16;
  std::size_t classes = 3;

  std::size_t conv_out_height() const { return input_height - conv_kernel + 1; }
  std::size_t conv_out_width() const { return input_width - conv_kernel + 1; }
  std::size_t pooled_height() const { return conv_out_height() / pool; }
  std::size_t pooled_width() const { return conv_out_width() / pool; }
  std::size_t flat_size() const { return conv_filters * pooled_height() * pooled_width(); }

  // Throws ContractError when the layer sizes do not chain.
  void validate() const;

  // key=value lines, one per field, in declaration order.
  std::string to_text() const;
  static ArchitectureConfig from_text(const std::string& text);

  friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;
};

// Small configuration used by gradient checks.
ArchitectureConfig tiny_architecture();

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// One tensor per learnable parameter block, in checkpoint order.
struct Weights {
  Tensor conv_w;    // [F, K, K]
  Tensor conv_b;    // [F]
  Tensor dense1_w;  // [D1, flat]
  Tensor dense1_b;  // [D1]
  Tensor dense2_w;  // [D2, D1]
  Tensor dense2_b;  // [D2]
  Tensor out_w;     // [3, D2]
  Tensor out_b;     // [3]

  static constexpr std::size_t kBlockCount = 8;
  static const std::array<const char*, kBlockCount>& block_names();

  std::array<Tensor*, kBlockCount> blocks();
  std::array<const Tensor*, kBlockCount> blocks() const;

  // Zero-filled blocks with the shapes implied by `arch`.
  static Weights zeros(const ArchitectureConfig& arch);

  std::size_t parameter_count() const;

  friend bool operator==(const Weights&, const Weights&) = default;
};

using Gradients = Weights;

struct NetworkParams {
  ArchitectureConfig arch;
  Weights weights;
  Weights adam_m;
  Weights adam_v;
  std::uint64_t adam_t = 0;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

// Shape check of every block against `params.arch`.
void check_shapes(const NetworkParams& params);

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

// Valid cross-correlation, stride 1, single input channel.
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias);

enum class Activation { Elu, Relu, Softmax };

Tensor activate(Activation kind, const Tensor& x);

struct PoolResult {
  Tensor output;
  // Flat index into the pooled input for each output element.
  std::vector<std::size_t> argmax;
};

// Non-overlapping 2x2 max pooling; ties go to the smallest flat index.
PoolResult maxpool2(const Tensor& x);

Tensor dense(const Tensor& x, const Tensor& weights, const Tensor& bias);

// ---------------------------------------------------------------------------
// Whole network
// ---------------------------------------------------------------------------

struct ForwardCache {
  ArchitectureConfig arch;
  Tensor input;       // [1,H,W]
  Tensor conv_pre;    // [F,Hc,Wc]
  Tensor conv_act;    // ELU(conv_pre)
  std::vector<std::size_t> pool_argmax;
  Tensor flat;        // [flat]
  Tensor dense1_pre;
  Tensor dense1_act;
  Tensor dense2_pre;
  Tensor dense2_act;
  Tensor logits;
  Tensor probs;
};

struct ForwardResult {
  Tensor probs;
  ForwardCache cache;
};

// Input pixels must lie in [0,1]; anything else is a ContractError.
ForwardResult forward(const NetworkParams& params, const Tensor& frame);

// Forward pass without keeping intermediates.
Tensor predict_probs(const NetworkParams& params, const Tensor& frame);

enum class LossKind { Mse, CrossEntropy };

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // dLoss/dprobs
};

// Mean over the three classes of the squared error.
LossResult mse_loss(const Tensor& probs, const Tensor& target);
LossResult cross_entropy_loss(const Tensor& probs, const Tensor& target);
LossResult compute_loss(LossKind kind, const Tensor& probs, const Tensor& target);

// One-hot vector for class index 0..2.
Tensor one_hot(std::size_t index, std::size_t classes = 3);

Gradients backward(const NetworkParams& params, const ForwardCache& cache,
                   const Tensor& dloss_dprobs);

// Adds the gradients of one sample into `into`; backward() is zeros + this.
void accumulate_gradients(const NetworkParams& params, const ForwardCache& cache,
                          const Tensor& dloss_dprobs, Gradients& into);

NetworkParams adam_step(const NetworkParams& params, const Gradients& grads,
                        const AdamConfig& cfg);

// Glorot-uniform weights, zero biases and zero optimizer state.
NetworkParams init_params(const ArchitectureConfig& arch, std::uint64_t seed);

// Rounds every weight to the nearest float, the precision checkpoints store.
NetworkParams round_to_storage(NetworkParams params);

// ---------------------------------------------------------------------------
// Checkpoint "BCW1"
// ---------------------------------------------------------------------------

std::vector<std::uint8_t> encode_checkpoint(const NetworkParams& params);
// `origin` names the source in error messages.
NetworkParams decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                                const std::string& origin = "<memory>");

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_checkpoint(const std::filesystem::path& path);

}  // namespace bcdrive
