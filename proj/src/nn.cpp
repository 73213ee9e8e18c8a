#include "bcdrive/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "bcdrive/errors.hpp"
#include "bcdrive/rng.hpp"

namespace bcdrive {

namespace {

void require_shape(bool ok, const std::string& what, const Tensor& a, const Tensor& b) {
  if (!ok) {
    throw ShapeError(what + ": incompatible shapes " + a.shape_string() + " and " +
                     b.shape_string());
  }
}

const Tensor& expect_dims(const Tensor& t, const std::vector<std::size_t>& dims,
                          const char* name) {
  if (t.dims() != dims) {
    throw ShapeError(std::string(name) + " has shape " + t.shape_string() + ", expected " +
                     shape_string(dims));
  }
  return t;
}

std::vector<std::size_t> block_dims(const ArchitectureConfig& a, std::size_t block) {
  const std::size_t k = a.conv_kernel;
  switch (block) {
    case 0: return {a.conv_filters, k, k};
    case 1: return {a.conv_filters};
    case 2: return {a.dense1_units, a.flat_size()};
    case 3: return {a.dense1_units};
    case 4: return {a.dense2_units, a.dense1_units};
    case 5: return {a.dense2_units};
    case 6: return {a.classes, a.dense2_units};
    default: return {a.classes};
  }
}

// Softmax Jacobian-vector product: dz = p * (dp - <p, dp>).
Tensor softmax_backward(const Tensor& probs, const Tensor& dprobs) {
  double dot = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) dot += probs[i] * dprobs[i];
  Tensor dz({probs.size()});
  for (std::size_t i = 0; i < probs.size(); ++i) dz[i] = probs[i] * (dprobs[i] - dot);
  return dz;
}

// dW += dz (outer) x, db += dz; returns dx = W^T dz.
Tensor dense_backward(const Tensor& x, const Tensor& w, const Tensor& dz, Tensor& dw,
                      Tensor& db) {
  const std::size_t m = w.dim(0);
  const std::size_t n = w.dim(1);
  Tensor dx({n});
  const double* xs = x.data().data();
  const double* ws = w.data().data();
  double* dws = dw.data().data();
  double* dxs = dx.data().data();
  for (std::size_t r = 0; r < m; ++r) {
    const double g = dz[r];
    db[r] += g;
    const double* wrow = ws + r * n;
    double* dwrow = dws + r * n;
    for (std::size_t c = 0; c < n; ++c) {
      dwrow[c] += g * xs[c];
      dxs[c] += wrow[c] * g;
    }
  }
  return dx;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configs
// ---------------------------------------------------------------------------

void ArchitectureConfig::validate() const {
  if (classes != 3) throw ContractError("architecture: classes must be 3");
  if (pool != 2) throw ContractError("architecture: pool must be 2");
  if (conv_filters == 0 || conv_kernel == 0 || dense1_units == 0 || dense2_units == 0) {
    throw ContractError("architecture: layer sizes must be positive");
  }
  if (input_height < conv_kernel || input_width < conv_kernel) {
    throw ContractError("architecture: kernel larger than input");
  }
  if (conv_out_height() % pool != 0 || conv_out_width() % pool != 0) {
    throw ContractError("architecture: pool does not divide conv output " +
                        std::to_string(conv_out_height()) + "x" +
                        std::to_string(conv_out_width()));
  }
}

std::string ArchitectureConfig::to_text() const {
  std::ostringstream os;
  os << "input_height=" << input_height << '\n'
     << "input_width=" << input_width << '\n'
     << "conv_filters=" << conv_filters << '\n'
     << "conv_kernel=" << conv_kernel << '\n'
     << "pool=" << pool << '\n'
     << "dense1_units=" << dense1_units << '\n'
     << "dense2_units=" << dense2_units << '\n'
     << "classes=" << classes << '\n';
  return os.str();
}

ArchitectureConfig ArchitectureConfig::from_text(const std::string& text) {
  ArchitectureConfig cfg;
  std::array<bool, 8> seen{};
  const std::array<std::pair<const char*, std::size_t ArchitectureConfig::*>, 8> fields{{
      {"input_height", &ArchitectureConfig::input_height},
      {"input_width", &ArchitectureConfig::input_width},
      {"conv_filters", &ArchitectureConfig::conv_filters},
      {"conv_kernel", &ArchitectureConfig::conv_kernel},
      {"pool", &ArchitectureConfig::pool},
      {"dense1_units", &ArchitectureConfig::dense1_units},
      {"dense2_units", &ArchitectureConfig::dense2_units},
      {"classes", &ArchitectureConfig::classes},
  }};
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("architecture line without '=': " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    auto it = std::find_if(fields.begin(), fields.end(),
                           [&](const auto& f) { return key == f.first; });
    if (it == fields.end()) throw FormatError("unknown architecture key: " + key);
    std::size_t parsed = 0;
    std::size_t used = 0;
    try {
      parsed = std::stoul(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) {
      throw FormatError("bad architecture value for " + key + ": " + value);
    }
    cfg.*(it->second) = parsed;
    seen[static_cast<std::size_t>(it - fields.begin())] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw FormatError(std::string("missing architecture key: ") + fields[i].first);
  }
  return cfg;
}

ArchitectureConfig tiny_architecture() {
  ArchitectureConfig a;
  a.input_height = 8;
  a.input_width = 8;
  a.conv_filters = 2;
  a.conv_kernel = 3;
  a.dense1_units = 4;
  a.dense2_units = 4;
  return a;
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ContractError("adam: learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ContractError("adam: beta1 must be in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ContractError("adam: beta2 must be in (0,1)");
  if (!(epsilon > 0.0)) throw ContractError("adam: epsilon must be > 0");
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

const std::array<const char*, Weights::kBlockCount>& Weights::block_names() {
  static const std::array<const char*, kBlockCount> names{
      "conv_w", "conv_b", "dense1_w", "dense1_b", "dense2_w", "dense2_b", "out_w", "out_b"};
  return names;
}

std::array<Tensor*, Weights::kBlockCount> Weights::blocks() {
  return {&conv_w, &conv_b, &dense1_w, &dense1_b, &dense2_w, &dense2_b, &out_w, &out_b};
}

std::array<const Tensor*, Weights::kBlockCount> Weights::blocks() const {
  return {&conv_w, &conv_b, &dense1_w, &dense1_b, &dense2_w, &dense2_b, &out_w, &out_b};
}

Weights Weights::zeros(const ArchitectureConfig& arch) {
  Weights w;
  auto blocks = w.blocks();
  for (std::size_t b = 0; b < kBlockCount; ++b) *blocks[b] = Tensor(block_dims(arch, b));
  return w;
}

std::size_t Weights::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : blocks()) n += t->size();
  return n;
}

void check_shapes(const NetworkParams& params) {
  const auto names = Weights::block_names();
  for (const Weights* set : {&params.weights, &params.adam_m, &params.adam_v}) {
    const auto blocks = set->blocks();
    for (std::size_t b = 0; b < Weights::kBlockCount; ++b) {
      expect_dims(*blocks[b], block_dims(params.arch, b), names[b]);
    }
  }
}

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_shape(input.rank() == 3 && input.dim(0) == 1 && weights.rank() == 3 &&
                    weights.dim(1) == weights.dim(2),
                "conv2d", input, weights);
  require_shape(bias.rank() == 1 && bias.dim(0) == weights.dim(0), "conv2d bias", weights,
                bias);
  const std::size_t h = input.dim(1);
  const std::size_t w = input.dim(2);
  const std::size_t k = weights.dim(1);
  require_shape(h >= k && w >= k, "conv2d", input, weights);
  const std::size_t filters = weights.dim(0);
  const std::size_t oh = h - k + 1;
  const std::size_t ow = w - k + 1;

  Tensor out({filters, oh, ow});
  const double* in = input.data().data();
  for (std::size_t f = 0; f < filters; ++f) {
    double* plane = out.data().data() + f * oh * ow;
    std::fill(plane, plane + oh * ow, bias[f]);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        const double wv = weights.at(f, a, b);
        for (std::size_t i = 0; i < oh; ++i) {
          const double* row = in + (i + a) * w + b;
          double* orow = plane + i * ow;
          for (std::size_t j = 0; j < ow; ++j) orow[j] += wv * row[j];
        }
      }
    }
  }
  return out;
}

Tensor activate(Activation kind, const Tensor& x) {
  Tensor y = x;
  switch (kind) {
    case Activation::Elu:
      for (double& v : y.data()) v = v >= 0.0 ? v : std::expm1(v);
      break;
    case Activation::Relu:
      for (double& v : y.data()) v = std::max(0.0, v);
      break;
    case Activation::Softmax: {
      if (x.rank() != 1) throw ShapeError("softmax expects rank-1 input, got " + x.shape_string());
      const double top = *std::max_element(x.data().begin(), x.data().end());
      double sum = 0.0;
      for (double& v : y.data()) {
        v = std::exp(v - top);
        sum += v;
      }
      for (double& v : y.data()) v /= sum;
      break;
    }
  }
  return y;
}

PoolResult maxpool2(const Tensor& x) {
  if (x.rank() != 3) throw ShapeError("maxpool2 expects [F,H,W], got " + x.shape_string());
  const std::size_t f = x.dim(0);
  const std::size_t h = x.dim(1);
  const std::size_t w = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("maxpool2 needs even height and width, got " + x.shape_string());
  }
  PoolResult r{Tensor({f, h / 2, w / 2}), {}};
  r.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (std::size_t c = 0; c < f; ++c) {
    for (std::size_t i = 0; i < h / 2; ++i) {
      for (std::size_t j = 0; j < w / 2; ++j, ++o) {
        // Scan in increasing flat index; strict comparison keeps the first maximum.
        const std::size_t base = (c * h + 2 * i) * w + 2 * j;
        const std::array<std::size_t, 4> cand{base, base + 1, base + w, base + w + 1};
        std::size_t best = cand[0];
        for (std::size_t idx : cand) {
          if (x[idx] > x[best]) best = idx;
        }
        r.output[o] = x[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

Tensor dense(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  require_shape(weights.rank() == 2 && x.rank() == 1 && weights.dim(1) == x.dim(0), "dense",
                weights, x);
  require_shape(bias.rank() == 1 && bias.dim(0) == weights.dim(0), "dense bias", weights, bias);
  const std::size_t m = weights.dim(0);
  const std::size_t n = weights.dim(1);
  Tensor out({m});
  const double* xs = x.data().data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = weights.data().data() + r * n;
    double acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) acc += row[c] * xs[c];
    out[r] = acc + bias[r];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

ForwardResult forward(const NetworkParams& params, const Tensor& frame) {
  const ArchitectureConfig& a = params.arch;
  expect_dims(frame, {1, a.input_height, a.input_width}, "frame");
  for (double v : frame.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ContractError("forward: frame pixel " + std::to_string(v) + " outside [0,1]");
    }
  }
  const Weights& w = params.weights;
  ForwardCache c;
  c.arch = a;
  c.input = frame;
  c.conv_pre = conv2d(frame, w.conv_w, w.conv_b);
  c.conv_act = activate(Activation::Elu, c.conv_pre);
  PoolResult pooled = maxpool2(c.conv_act);
  c.pool_argmax = std::move(pooled.argmax);
  c.flat = Tensor({pooled.output.size()}, std::vector<double>(pooled.output.values()));
  c.dense1_pre = dense(c.flat, w.dense1_w, w.dense1_b);
  c.dense1_act = activate(Activation::Relu, c.dense1_pre);
  c.dense2_pre = dense(c.dense1_act, w.dense2_w, w.dense2_b);
  c.dense2_act = activate(Activation::Relu, c.dense2_pre);
  c.logits = dense(c.dense2_act, w.out_w, w.out_b);
  c.probs = activate(Activation::Softmax, c.logits);
  if (!c.probs.all_finite()) throw std::runtime_error("forward: non-finite network output");
  ForwardResult r{c.probs, std::move(c)};
  return r;
}

Tensor predict_probs(const NetworkParams& params, const Tensor& frame) {
  return forward(params, frame).probs;
}

Tensor one_hot(std::size_t index, std::size_t classes) {
  if (index >= classes) throw ContractError("one_hot: index out of range");
  Tensor t({classes});
  t[index] = 1.0;
  return t;
}

namespace {

void check_one_hot(const Tensor& probs, const Tensor& target) {
  require_shape(probs.rank() == 1 && probs.same_shape(target), "loss", probs, target);
  int ones = 0;
  for (double v : target.data()) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      ones = -1;
      break;
    }
  }
  if (ones != 1) throw ContractError("loss: target is not one-hot");
}

}  // namespace

LossResult mse_loss(const Tensor& probs, const Tensor& target) {
  check_one_hot(probs, target);
  const double n = static_cast<double>(probs.size());
  LossResult r{0.0, Tensor({probs.size()})};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double d = probs[i] - target[i];
    r.loss += d * d;
    r.grad[i] = 2.0 * d / n;
  }
  r.loss /= n;
  return r;
}

LossResult cross_entropy_loss(const Tensor& probs, const Tensor& target) {
  check_one_hot(probs, target);
  constexpr double kFloor = 1e-12;
  LossResult r{0.0, Tensor({probs.size()})};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (target[i] == 1.0) {
      const double p = std::max(probs[i], kFloor);
      r.loss = -std::log(p);
      r.grad[i] = -1.0 / p;
    }
  }
  return r;
}

LossResult compute_loss(LossKind kind, const Tensor& probs, const Tensor& target) {
  return kind == LossKind::Mse ? mse_loss(probs, target) : cross_entropy_loss(probs, target);
}

Gradients backward(const NetworkParams& params, const ForwardCache& cache,
                   const Tensor& dloss_dprobs) {
  Gradients g = Weights::zeros(params.arch);
  accumulate_gradients(params, cache, dloss_dprobs, g);
  return g;
}

void accumulate_gradients(const NetworkParams& params, const ForwardCache& cache,
                          const Tensor& dloss_dprobs, Gradients& g) {
  if (!(cache.arch == params.arch) || cache.probs.size() != params.arch.classes ||
      cache.pool_argmax.size() != params.arch.flat_size()) {
    throw ContractError("backward: cache does not come from a forward pass of these params");
  }
  require_shape(dloss_dprobs.same_shape(cache.probs), "backward", dloss_dprobs, cache.probs);

  const Weights& w = params.weights;
  Tensor dz3 = softmax_backward(cache.probs, dloss_dprobs);
  Tensor da2 = dense_backward(cache.dense2_act, w.out_w, dz3, g.out_w, g.out_b);

  for (std::size_t i = 0; i < da2.size(); ++i) {
    if (!(cache.dense2_pre[i] > 0.0)) da2[i] = 0.0;
  }
  Tensor da1 = dense_backward(cache.dense1_act, w.dense2_w, da2, g.dense2_w, g.dense2_b);

  for (std::size_t i = 0; i < da1.size(); ++i) {
    if (!(cache.dense1_pre[i] > 0.0)) da1[i] = 0.0;
  }
  Tensor dflat = dense_backward(cache.flat, w.dense1_w, da1, g.dense1_w, g.dense1_b);

  // Route through the pooling argmax, then through ELU.
  Tensor dconv(cache.conv_pre.dims());
  for (std::size_t o = 0; o < dflat.size(); ++o) dconv[cache.pool_argmax[o]] += dflat[o];
  for (std::size_t i = 0; i < dconv.size(); ++i) {
    const double z = cache.conv_pre[i];
    if (z < 0.0) dconv[i] *= cache.conv_act[i] + 1.0;
  }

  const std::size_t filters = dconv.dim(0);
  const std::size_t oh = dconv.dim(1);
  const std::size_t ow = dconv.dim(2);
  const std::size_t k = params.arch.conv_kernel;
  const std::size_t iw = cache.input.dim(2);
  const double* in = cache.input.data().data();
  for (std::size_t f = 0; f < filters; ++f) {
    const double* plane = dconv.data().data() + f * oh * ow;
    double bsum = 0.0;
    for (std::size_t i = 0; i < oh * ow; ++i) bsum += plane[i];
    g.conv_b[f] += bsum;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < oh; ++i) {
          const double* row = in + (i + a) * iw + b;
          const double* grow = plane + i * ow;
          for (std::size_t j = 0; j < ow; ++j) acc += grow[j] * row[j];
        }
        g.conv_w.at(f, a, b) += acc;
      }
    }
  }
}

NetworkParams adam_step(const NetworkParams& params, const Gradients& grads,
                        const AdamConfig& cfg) {
  cfg.validate();
  const auto names = Weights::block_names();
  const auto pw = params.weights.blocks();
  const auto gw = grads.blocks();
  for (std::size_t b = 0; b < Weights::kBlockCount; ++b) {
    if (!pw[b]->same_shape(*gw[b])) {
      throw ShapeError(std::string("adam_step: gradient ") + names[b] + " has shape " +
                       gw[b]->shape_string() + ", weights have " + pw[b]->shape_string());
    }
  }

  NetworkParams next = params;
  next.adam_t = params.adam_t + 1;
  const double t = static_cast<double>(next.adam_t);
  const double m_corr = 1.0 - std::pow(cfg.beta1, t);
  const double v_corr = 1.0 - std::pow(cfg.beta2, t);

  auto nw = next.weights.blocks();
  auto nm = next.adam_m.blocks();
  auto nv = next.adam_v.blocks();
  for (std::size_t b = 0; b < Weights::kBlockCount; ++b) {
    auto wv = nw[b]->data();
    auto mv = nm[b]->data();
    auto vv = nv[b]->data();
    auto gv = gw[b]->data();
    for (std::size_t i = 0; i < wv.size(); ++i) {
      const double g = gv[i];
      mv[i] = cfg.beta1 * mv[i] + (1.0 - cfg.beta1) * g;
      vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = mv[i] / m_corr;
      const double v_hat = vv[i] / v_corr;
      wv[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
  return next;
}

NetworkParams init_params(const ArchitectureConfig& arch, std::uint64_t seed) {
  arch.validate();
  NetworkParams p;
  p.arch = arch;
  p.weights = Weights::zeros(arch);
  p.adam_m = Weights::zeros(arch);
  p.adam_v = Weights::zeros(arch);

  const double k2 = static_cast<double>(arch.conv_kernel * arch.conv_kernel);
  struct Fan {
    Tensor* tensor;
    double fan_in;
    double fan_out;
  };
  const std::array<Fan, 4> layers{{
      {&p.weights.conv_w, k2, k2 * static_cast<double>(arch.conv_filters)},
      {&p.weights.dense1_w, static_cast<double>(arch.flat_size()),
       static_cast<double>(arch.dense1_units)},
      {&p.weights.dense2_w, static_cast<double>(arch.dense1_units),
       static_cast<double>(arch.dense2_units)},
      {&p.weights.out_w, static_cast<double>(arch.dense2_units),
       static_cast<double>(arch.classes)},
  }};
  Rng rng(seed);
  for (const Fan& layer : layers) {
    const double bound = std::sqrt(6.0 / (layer.fan_in + layer.fan_out));
    for (double& v : layer.tensor->data()) v = rng.uniform(-bound, bound);
  }
  return p;
}

NetworkParams round_to_storage(NetworkParams params) {
  for (Tensor* t : params.weights.blocks()) {
    for (double& v : t->data()) v = static_cast<double>(static_cast<float>(v));
  }
  return params;
}

// ---------------------------------------------------------------------------
// Checkpoint
// ---------------------------------------------------------------------------

namespace {
constexpr std::array<std::uint8_t, 4> kMagic{'B', 'C', 'W', '1'};
}

std::vector<std::uint8_t> encode_checkpoint(const NetworkParams& params) {
  check_shapes(params);
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  const std::string text = params.arch.to_text();
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const Tensor* t : params.weights.blocks()) {
    for (double v : t->data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

NetworkParams decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                                const std::string& origin) {
  if (bytes.size() < 8 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError(origin + ": not a BCW1 checkpoint (bad magic bytes)");
  }
  const std::size_t text_len = get_u32(bytes, 4);
  if (bytes.size() < 8 + text_len) throw FormatError(origin + ": truncated architecture header");
  const std::string text(bytes.begin() + 8, bytes.begin() + 8 + static_cast<long>(text_len));
  ArchitectureConfig arch;
  try {
    arch = ArchitectureConfig::from_text(text);
    arch.validate();
  } catch (const std::logic_error& e) {
    throw FormatError(origin + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(origin + ": " + e.what());
  }
  NetworkParams p;
  p.arch = arch;
  p.weights = Weights::zeros(arch);
  p.adam_m = Weights::zeros(arch);
  p.adam_v = Weights::zeros(arch);
  const std::size_t expected = 8 + text_len + 4 * p.weights.parameter_count();
  if (bytes.size() != expected) {
    throw FormatError(origin + ": checkpoint has " + std::to_string(bytes.size()) +
                      " bytes, architecture requires " + std::to_string(expected));
  }
  std::size_t pos = 8 + text_len;
  for (Tensor* t : p.weights.blocks()) {
    for (double& v : t->data()) {
      v = static_cast<double>(std::bit_cast<float>(get_u32(bytes, pos)));
      pos += 4;
    }
  }
  return p;
}

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing checkpoint " + path.string());
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, path.string());
}

}  // namespace bcdrive
