#include "gridfault/cnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "gridfault/rng.hpp"

namespace gridfault {

namespace {

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian");

int conv_out(int len, int kernel) { return len - kernel + 1; }
int pool_out(int len) { return (len + 1) / 2; }  // ceil mode

// Flat parameter layout. Convolution weights are kernel-major
// [out_ch][in_ch][k], each conv layer followed by its per-channel biases;
// the output layer stores W_o as [flat][class] then B_o.
struct ConvBlock {
  std::size_t w_off = 0, b_off = 0;
  int out_ch = 0, in_ch = 0, kernel = 0;
  int len_in = 0, len_conv = 0, len_pool = 0;
};

struct AffineBlock {
  std::size_t w_off = 0, b_off = 0;
  int in = 0, out = 0;
  bool relu = false;
};

struct Layout {
  std::vector<ConvBlock> conv;
  std::vector<AffineBlock> affine;  // hidden affines (Nn) + output layer
  int flat = 0;
  std::size_t total = 0;
};

Layout make_layout(const ArchitectureSpec& arch) {
  arch.validate();
  Layout layout;
  std::size_t at = 0;
  if (arch.kind == ModelKind::Cnn) {
    int len = arch.input_length;
    int channels = 1;
    for (const ConvLayerSpec& spec : arch.conv) {
      ConvBlock block;
      block.out_ch = spec.kernels;
      block.in_ch = channels;
      block.kernel = spec.kernel_len;
      block.len_in = len;
      block.len_conv = conv_out(len, spec.kernel_len);
      block.len_pool = pool_out(block.len_conv);
      block.w_off = at;
      at += static_cast<std::size_t>(block.out_ch) * block.in_ch * block.kernel;
      block.b_off = at;
      at += block.out_ch;
      layout.conv.push_back(block);
      len = block.len_pool;
      channels = block.out_ch;
    }
    layout.flat = channels * len;
  } else {
    int width = arch.input_length;
    for (int h : arch.hidden) {
      AffineBlock block;
      block.in = width;
      block.out = h;
      block.relu = true;
      block.w_off = at;
      at += static_cast<std::size_t>(width) * h;
      block.b_off = at;
      at += h;
      layout.affine.push_back(block);
      width = h;
    }
    layout.flat = width;
  }
  AffineBlock out;
  out.in = layout.flat;
  out.out = arch.num_classes;
  out.relu = false;
  out.w_off = at;
  at += static_cast<std::size_t>(out.in) * out.out;
  out.b_off = at;
  at += out.out;
  layout.affine.push_back(out);
  layout.total = at;
  return layout;
}

struct ForwardScratch {
  // Interleaved activations: per conv layer the pre-ReLU map, the pooled map
  // and the argmax routing; per affine layer the pre-activation.
  std::vector<std::vector<double>> conv_pre;
  std::vector<std::vector<double>> pooled;
  std::vector<std::vector<int>> pool_arg;
  std::vector<std::vector<double>> affine_pre;
  std::vector<double> probs;
};

void softmax_inplace(std::vector<double>& logits) {
  double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

void run_forward(const Layout& layout, const std::vector<double>& theta,
                 const double* x, int input_length, ForwardScratch& scratch) {
  scratch.conv_pre.assign(layout.conv.size(), {});
  scratch.pooled.assign(layout.conv.size(), {});
  scratch.pool_arg.assign(layout.conv.size(), {});
  scratch.affine_pre.assign(layout.affine.size(), {});

  std::vector<double> current(x, x + input_length);
  for (std::size_t l = 0; l < layout.conv.size(); ++l) {
    const ConvBlock& b = layout.conv[l];
    std::vector<double>& pre = scratch.conv_pre[l];
    pre.assign(static_cast<std::size_t>(b.out_ch) * b.len_conv, 0.0);
    for (int o = 0; o < b.out_ch; ++o) {
      const double bias = theta[b.b_off + o];
      for (int pos = 0; pos < b.len_conv; ++pos) {
        double acc = bias;
        for (int c = 0; c < b.in_ch; ++c) {
          const double* w =
              &theta[b.w_off + (static_cast<std::size_t>(o) * b.in_ch + c) *
                                   b.kernel];
          const double* in = &current[static_cast<std::size_t>(c) * b.len_in];
          for (int k = 0; k < b.kernel; ++k) acc += w[k] * in[pos + k];
        }
        pre[static_cast<std::size_t>(o) * b.len_conv + pos] = acc;
      }
    }
    std::vector<double>& pooled = scratch.pooled[l];
    std::vector<int>& arg = scratch.pool_arg[l];
    pooled.assign(static_cast<std::size_t>(b.out_ch) * b.len_pool, 0.0);
    arg.assign(pooled.size(), 0);
    for (int o = 0; o < b.out_ch; ++o) {
      for (int p = 0; p < b.len_pool; ++p) {
        const int first = 2 * p;
        const int second = std::min(first + 1, b.len_conv - 1);
        const std::size_t base = static_cast<std::size_t>(o) * b.len_conv;
        double a = std::max(pre[base + first], 0.0);  // ReLU then pool
        double c = std::max(pre[base + second], 0.0);
        const bool take_second = c > a;
        pooled[static_cast<std::size_t>(o) * b.len_pool + p] =
            take_second ? c : a;
        arg[static_cast<std::size_t>(o) * b.len_pool + p] =
            take_second ? second : first;
      }
    }
    current = pooled;
  }

  for (std::size_t l = 0; l < layout.affine.size(); ++l) {
    const AffineBlock& b = layout.affine[l];
    std::vector<double>& pre = scratch.affine_pre[l];
    pre.assign(b.out, 0.0);
    for (int o = 0; o < b.out; ++o) {
      double acc = theta[b.b_off + o];
      for (int i = 0; i < b.in; ++i) {
        acc += theta[b.w_off + static_cast<std::size_t>(i) * b.out + o] *
               current[i];
      }
      pre[o] = acc;
    }
    if (b.relu) {
      current.assign(pre.begin(), pre.end());
      for (double& v : current) v = std::max(v, 0.0);
    } else {
      current = pre;
    }
  }
  scratch.probs = current;
  softmax_inplace(scratch.probs);
}

// Accumulates the data-term gradient of one sample (softmax cross entropy)
// into grad, scaled by `scale`.
void run_backward(const Layout& layout, const std::vector<double>& theta,
                  const double* x, int input_length, int label, double scale,
                  const ForwardScratch& scratch, std::vector<double>& grad) {
  std::vector<double> delta(scratch.probs);
  delta[label] -= 1.0;
  for (double& v : delta) v *= scale;

  for (std::size_t l = layout.affine.size(); l-- > 0;) {
    const AffineBlock& b = layout.affine[l];
    // Input activations of this affine layer.
    std::vector<double> input;
    if (l > 0) {
      input = scratch.affine_pre[l - 1];
      for (double& v : input) v = std::max(v, 0.0);
    } else if (layout.conv.empty()) {
      input.assign(x, x + input_length);
    } else {
      input = scratch.pooled.back();
    }
    std::vector<double> dinput(b.in, 0.0);
    for (int o = 0; o < b.out; ++o) {
      const double d = delta[o];
      grad[b.b_off + o] += d;
      for (int i = 0; i < b.in; ++i) {
        grad[b.w_off + static_cast<std::size_t>(i) * b.out + o] +=
            d * input[i];
        dinput[i] +=
            theta[b.w_off + static_cast<std::size_t>(i) * b.out + o] * d;
      }
    }
    if (l > 0) {
      // Route through the ReLU of the previous affine layer.
      const std::vector<double>& pre = scratch.affine_pre[l - 1];
      for (int i = 0; i < b.in; ++i) {
        dinput[i] = pre[i] > 0.0 ? dinput[i] : 0.0;
      }
    }
    delta = std::move(dinput);
  }
  if (layout.conv.empty()) return;

  // delta now sits on the flattened pooled output of the last conv layer.
  for (std::size_t l = layout.conv.size(); l-- > 0;) {
    const ConvBlock& b = layout.conv[l];
    const std::vector<double>& pre = scratch.conv_pre[l];
    const std::vector<int>& arg = scratch.pool_arg[l];

    // Un-pool onto the conv map, masking by ReLU activity.
    std::vector<double> dconv(static_cast<std::size_t>(b.out_ch) * b.len_conv,
                              0.0);
    for (int o = 0; o < b.out_ch; ++o) {
      for (int p = 0; p < b.len_pool; ++p) {
        const std::size_t pooled_at =
            static_cast<std::size_t>(o) * b.len_pool + p;
        const int src = arg[pooled_at];
        const std::size_t conv_at = static_cast<std::size_t>(o) * b.len_conv +
                                    src;
        if (pre[conv_at] > 0.0) dconv[conv_at] += delta[pooled_at];
      }
    }

    const std::vector<double> input_storage =
        l == 0 ? std::vector<double>(x, x + input_length)
               : scratch.pooled[l - 1];
    std::vector<double> dinput(
        static_cast<std::size_t>(b.in_ch) * b.len_in, 0.0);
    for (int o = 0; o < b.out_ch; ++o) {
      for (int pos = 0; pos < b.len_conv; ++pos) {
        const double d = dconv[static_cast<std::size_t>(o) * b.len_conv + pos];
        if (d == 0.0) continue;
        grad[b.b_off + o] += d;
        for (int c = 0; c < b.in_ch; ++c) {
          const std::size_t w_base =
              b.w_off +
              (static_cast<std::size_t>(o) * b.in_ch + c) * b.kernel;
          const std::size_t in_base = static_cast<std::size_t>(c) * b.len_in;
          for (int k = 0; k < b.kernel; ++k) {
            grad[w_base + k] += d * input_storage[in_base + pos + k];
            dinput[in_base + pos + k] += theta[w_base + k] * d;
          }
        }
      }
    }
    delta = std::move(dinput);
  }
}

Prediction to_prediction(const std::vector<double>& probs) {
  Prediction out;
  out.probabilities = Eigen::Map<const RVector>(probs.data(),
                                                static_cast<int>(probs.size()));
  out.ranking.resize(probs.size());
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [&](int a, int b) { return probs[a] > probs[b]; });
  return out;
}

void check_batch(const ArchitectureSpec& arch, const LabeledSet& batch) {
  if (batch.size() == 0) throw ValidationError("batch must not be empty");
  if (batch.x.cols() != arch.input_length) {
    throw ValidationError("feature length " + std::to_string(batch.x.cols()) +
                          " does not match architecture input " +
                          std::to_string(arch.input_length));
  }
  if (batch.x.rows() != batch.size()) {
    throw ValidationError("feature matrix and label count disagree");
  }
  for (int label : batch.y) {
    if (label < 0 || label >= arch.num_classes) {
      throw ValidationError("label " + std::to_string(label) +
                            " outside [0, " +
                            std::to_string(arch.num_classes) + ")");
    }
  }
}

}  // namespace

void ArchitectureSpec::validate() const {
  if (input_length < 1) throw ValidationError("input length must be positive");
  if (num_classes < 2) throw ValidationError("need at least two classes");
  if (kind == ModelKind::Cnn) {
    int len = input_length;
    for (const ConvLayerSpec& spec : conv) {
      if (spec.kernels < 1 || spec.kernel_len < 1) {
        throw ValidationError("conv layer sizes must be positive");
      }
      if (spec.kernel_len > len) {
        throw ValidationError("kernel length " +
                              std::to_string(spec.kernel_len) +
                              " exceeds input length " + std::to_string(len));
      }
      len = pool_out(conv_out(len, spec.kernel_len));
    }
  } else {
    if (hidden.empty()) throw ValidationError("baseline needs hidden layers");
    for (int h : hidden) {
      if (h < 1) throw ValidationError("hidden widths must be positive");
    }
  }
}

std::vector<int> ArchitectureSpec::shape_chain() const {
  validate();
  std::vector<int> chain{input_length};
  if (kind == ModelKind::Cnn) {
    int len = input_length;
    for (const ConvLayerSpec& spec : conv) {
      len = conv_out(len, spec.kernel_len);
      chain.push_back(len);
      len = pool_out(len);
      chain.push_back(len);
    }
    chain.push_back(flattened_length());
  } else {
    for (int h : hidden) chain.push_back(h);
  }
  chain.push_back(num_classes);
  return chain;
}

int ArchitectureSpec::flattened_length() const {
  if (kind != ModelKind::Cnn) return hidden.empty() ? input_length
                                                    : hidden.back();
  int len = input_length;
  int channels = 1;
  for (const ConvLayerSpec& spec : conv) {
    len = pool_out(conv_out(len, spec.kernel_len));
    channels = spec.kernels;
  }
  return channels * len;
}

ArchitectureSpec cnn_architecture(int input_length, int num_classes) {
  ArchitectureSpec arch;
  arch.kind = ModelKind::Cnn;
  arch.input_length = input_length;
  arch.num_classes = num_classes;
  if (input_length >= 60) {
    arch.conv = {{4, 5}, {8, 5}, {8, 3}, {8, 3}};
  } else if (input_length >= 24) {
    arch.conv = {{4, 3}, {8, 3}, {8, 2}, {8, 2}};
  } else {
    // Small inputs: shed layers until the shape chain stays positive.
    int len = input_length;
    for (int l = 0; l < 2 && len >= 3; ++l) {
      arch.conv.push_back({l == 0 ? 4 : 8, 3});
      len = pool_out(conv_out(len, 3));
    }
    if (arch.conv.empty()) arch.conv = {{4, std::max(1, input_length - 1)}};
  }
  arch.validate();
  return arch;
}

ArchitectureSpec nn_architecture(int input_length, int num_classes) {
  ArchitectureSpec arch;
  arch.kind = ModelKind::Nn;
  arch.input_length = input_length;
  arch.num_classes = num_classes;
  arch.hidden = {32, 16};
  arch.validate();
  return arch;
}

std::size_t param_count(const ArchitectureSpec& arch) {
  return make_layout(arch).total;
}

Model init_model(const ArchitectureSpec& arch, std::uint64_t seed) {
  Layout layout = make_layout(arch);
  Model model;
  model.arch = arch;
  model.theta.assign(layout.total, 0.0);
  Rng rng = make_rng(derive_seed(seed, 0x696e6974ULL));
  for (const ConvBlock& b : layout.conv) {
    const double limit = std::sqrt(6.0 / (b.in_ch * b.kernel));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const std::size_t count =
        static_cast<std::size_t>(b.out_ch) * b.in_ch * b.kernel;
    for (std::size_t k = 0; k < count; ++k) model.theta[b.w_off + k] =
        dist(rng);
  }
  for (const AffineBlock& b : layout.affine) {
    const double limit = std::sqrt(6.0 / b.in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    const std::size_t count = static_cast<std::size_t>(b.in) * b.out;
    for (std::size_t k = 0; k < count; ++k) model.theta[b.w_off + k] =
        dist(rng);
  }
  return model;
}

Prediction forward(const Model& model, const RVector& x) {
  if (x.size() != model.arch.input_length) {
    throw ValidationError("input length " + std::to_string(x.size()) +
                          " does not match architecture input " +
                          std::to_string(model.arch.input_length));
  }
  Layout layout = make_layout(model.arch);
  if (model.theta.size() != layout.total) {
    throw ValidationError("parameter vector does not match architecture");
  }
  ForwardScratch scratch;
  if (model.scaler) {
    const RVector scaled = model.scaler->transform(x);
    run_forward(layout, model.theta, scaled.data(), model.arch.input_length,
                scratch);
  } else {
    run_forward(layout, model.theta, x.data(), model.arch.input_length,
                scratch);
  }
  return to_prediction(scratch.probs);
}

Prediction predict(const Model& model, const RVector& x) {
  return forward(model, x);
}

double loss(const Model& model, const LabeledSet& batch, double lambda) {
  check_batch(model.arch, batch);
  if (lambda < 0.0) throw ValidationError("lambda must be nonnegative");
  Layout layout = make_layout(model.arch);
  ForwardScratch scratch;
  double nll = 0.0;
  RVector row(model.arch.input_length);
  for (int s = 0; s < batch.size(); ++s) {
    row = batch.x.row(s);
    if (model.scaler) row = model.scaler->transform(row);
    run_forward(layout, model.theta, row.data(), model.arch.input_length,
                scratch);
    nll += -std::log(std::max(scratch.probs[batch.y[s]], 1e-300));
  }
  double reg = 0.0;
  for (double v : model.theta) reg += v * v;
  return nll / batch.size() + lambda * reg;
}

std::vector<double> backward(const Model& model, const LabeledSet& batch,
                             double lambda) {
  check_batch(model.arch, batch);
  Layout layout = make_layout(model.arch);
  std::vector<double> grad(layout.total, 0.0);
  ForwardScratch scratch;
  const double scale = 1.0 / batch.size();
  RVector row(model.arch.input_length);
  for (int s = 0; s < batch.size(); ++s) {
    row = batch.x.row(s);
    if (model.scaler) row = model.scaler->transform(row);
    run_forward(layout, model.theta, row.data(), model.arch.input_length,
                scratch);
    run_backward(layout, model.theta, row.data(), model.arch.input_length,
                 batch.y[s], scale, scratch, grad);
  }
  for (std::size_t k = 0; k < grad.size(); ++k) {
    grad[k] += 2.0 * lambda * model.theta[k];
  }
  return grad;
}

void TrainConfig::validate() const {
  if (lambda < 0.0) throw ValidationError("lambda must be nonnegative");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate invalid");
  if (!(rmsprop_decay > 0.0 && rmsprop_decay < 1.0)) {
    throw ValidationError("rmsprop decay must lie in (0, 1)");
  }
  if (check_period < 1 || patience < 1) {
    throw ValidationError("check period and patience must be at least 1");
  }
  if (batch_size < 1) throw ValidationError("batch size must be positive");
  if (max_steps < 1) throw ValidationError("max steps must be positive");
}

TrainResult train(const ArchitectureSpec& arch, const LabeledSet& train_set,
                  const LabeledSet& val_set, const TrainConfig& config) {
  config.validate();
  check_batch(arch, train_set);
  check_batch(arch, val_set);

  Layout layout = make_layout(arch);
  Model model = init_model(arch, config.seed);
  std::vector<double> rms(layout.total, 0.0);
  std::vector<double> grad(layout.total, 0.0);

  Rng rng = make_rng(derive_seed(config.seed, 0x747261696eULL));
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  const int batch = std::min<int>(config.batch_size, train_set.size());
  LabeledSet mini;
  mini.x.resize(batch, arch.input_length);
  mini.y.resize(batch);

  ForwardScratch scratch;
  RVector row(arch.input_length);

  TrainResult result;
  result.model = model;
  EarlyStopper stopper(config.patience);
  double last_train_loss = 0.0;

  auto checkpoint = [&](std::int64_t step) {
    const double val_loss = loss(model, val_set, config.lambda);
    result.history.push_back({step, last_train_loss, val_loss});
    const EarlyStopper::Decision decision = stopper.observe(val_loss);
    if (decision.improved) result.model = model;
    return decision.stop;
  };

  std::int64_t step = 0;
  for (; step < config.max_steps;) {
    ++step;
    for (int s = 0; s < batch; ++s) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const int pick = order[cursor++];
      mini.x.row(s) = train_set.x.row(pick);
      mini.y[s] = train_set.y[pick];
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    double nll = 0.0;
    const double scale = 1.0 / batch;
    for (int s = 0; s < batch; ++s) {
      row = mini.x.row(s);
      run_forward(layout, model.theta, row.data(), arch.input_length, scratch);
      nll += -std::log(std::max(scratch.probs[mini.y[s]], 1e-300));
      run_backward(layout, model.theta, row.data(), arch.input_length,
                   mini.y[s], scale, scratch, grad);
    }
    double reg = 0.0;
    for (double v : model.theta) reg += v * v;
    last_train_loss = nll / batch + config.lambda * reg;
    if (!std::isfinite(last_train_loss)) {
      throw ComputeError("training diverged at step " + std::to_string(step));
    }

    for (std::size_t k = 0; k < layout.total; ++k) {
      const double g = grad[k] + 2.0 * config.lambda * model.theta[k];
      rms[k] = config.rmsprop_decay * rms[k] +
               (1.0 - config.rmsprop_decay) * g * g;
      model.theta[k] -= config.learning_rate * g / (std::sqrt(rms[k]) + 1e-8);
    }

    if (step % config.check_period == 0) {
      if (checkpoint(step)) {
        result.early_stopped = true;
        break;
      }
    }
  }
  if (result.history.empty() || result.history.back().step != step) {
    checkpoint(step);  // final parameters compete as a checkpoint
  }
  result.best_val_loss = stopper.best;
  result.stopped_step = step;
  return result;
}

TrainResult train_nn_baseline(const LabeledSet& train_set,
                              const LabeledSet& val_set,
                              const TrainConfig& config) {
  if (train_set.size() == 0) throw ValidationError("empty training set");
  int classes = 0;
  for (int label : train_set.y) classes = std::max(classes, label + 1);
  for (int label : val_set.y) classes = std::max(classes, label + 1);
  const ArchitectureSpec arch =
      nn_architecture(static_cast<int>(train_set.x.cols()), classes);
  return train(arch, train_set, val_set, config);
}

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

constexpr char kMagic[4] = {'G', 'F', 'N', 'M'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
  Layout layout = make_layout(model.arch);
  if (model.theta.size() != layout.total) {
    throw ValidationError("parameter vector does not match architecture");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write model " + path.string());
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, model.arch.kind == ModelKind::Cnn ? 0 : 1);
  write_u32(out, static_cast<std::uint32_t>(model.arch.input_length));
  write_u32(out, static_cast<std::uint32_t>(model.arch.num_classes));
  write_u32(out, static_cast<std::uint32_t>(model.arch.conv.size()));
  for (const ConvLayerSpec& c : model.arch.conv) {
    write_u32(out, static_cast<std::uint32_t>(c.kernels));
    write_u32(out, static_cast<std::uint32_t>(c.kernel_len));
  }
  write_u32(out, static_cast<std::uint32_t>(model.arch.hidden.size()));
  for (int h : model.arch.hidden) write_u32(out, static_cast<std::uint32_t>(h));
  write_u32(out, model.scaler ? 1 : 0);
  if (model.scaler) {
    out.write(reinterpret_cast<const char*>(model.scaler->mean.data()),
              static_cast<std::streamsize>(model.arch.input_length *
                                           sizeof(double)));
    out.write(reinterpret_cast<const char*>(model.scaler->scale.data()),
              static_cast<std::streamsize>(model.arch.input_length *
                                           sizeof(double)));
  }
  write_u64(out, static_cast<std::uint64_t>(model.theta.size()));
  out.write(reinterpret_cast<const char*>(model.theta.data()),
            static_cast<std::streamsize>(model.theta.size() * sizeof(double)));
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError("not a model file: bad magic");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw ValidationError("unsupported model version " +
                          std::to_string(version));
  }
  Model model;
  model.arch.kind = read_u32(in) == 0 ? ModelKind::Cnn : ModelKind::Nn;
  model.arch.input_length = static_cast<int>(read_u32(in));
  model.arch.num_classes = static_cast<int>(read_u32(in));
  const std::uint32_t n_conv = read_u32(in);
  if (n_conv > 64) throw ValidationError("model file corrupt: conv count");
  model.arch.conv.clear();
  for (std::uint32_t k = 0; k < n_conv; ++k) {
    ConvLayerSpec spec;
    spec.kernels = static_cast<int>(read_u32(in));
    spec.kernel_len = static_cast<int>(read_u32(in));
    model.arch.conv.push_back(spec);
  }
  const std::uint32_t n_hidden = read_u32(in);
  if (n_hidden > 64) throw ValidationError("model file corrupt: hidden count");
  model.arch.hidden.clear();
  for (std::uint32_t k = 0; k < n_hidden; ++k) {
    model.arch.hidden.push_back(static_cast<int>(read_u32(in)));
  }
  const std::uint32_t has_scaler = read_u32(in);
  if (has_scaler > 1) throw ValidationError("model file corrupt: scaler flag");
  if (has_scaler == 1) {
    FeatureScaler scaler;
    scaler.mean.resize(model.arch.input_length);
    scaler.scale.resize(model.arch.input_length);
    in.read(reinterpret_cast<char*>(scaler.mean.data()),
            static_cast<std::streamsize>(model.arch.input_length *
                                         sizeof(double)));
    in.read(reinterpret_cast<char*>(scaler.scale.data()),
            static_cast<std::streamsize>(model.arch.input_length *
                                         sizeof(double)));
    if (!in) throw ValidationError("model file truncated");
    model.scaler = std::move(scaler);
  }
  const std::uint64_t count = read_u64(in);
  if (!in) throw ValidationError("model file truncated");
  Layout layout = make_layout(model.arch);
  if (count != layout.total) {
    throw ValidationError("model file parameter count " +
                          std::to_string(count) +
                          " does not match architecture (" +
                          std::to_string(layout.total) + ")");
  }
  model.theta.resize(count);
  in.read(reinterpret_cast<char*>(model.theta.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in || static_cast<std::uint64_t>(in.gcount()) != count * sizeof(double)) {
    throw ValidationError("model file truncated");
  }
  return model;
}

void save_history_csv(const std::vector<TrainHistoryEntry>& history,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write history " + path.string());
  out << "step,train_loss,val_loss\n";
  char buf[32];
  for (const TrainHistoryEntry& h : history) {
    out << h.step;
    std::snprintf(buf, sizeof(buf), "%.17g", h.train_loss);
    out << ',' << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", h.val_loss);
    out << ',' << buf << "\n";
  }
}

}  // namespace gridfault
