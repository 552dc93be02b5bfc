#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gridfault/features.hpp"

namespace gridfault {

enum class ModelKind { Cnn, Nn };

struct ConvLayerSpec {
  int kernels = 0;     // output channels
  int kernel_len = 0;  // 1-D kernel size; stride 1, no padding
};

/// Network description. Convolutional stacks alternate valid convolution,
/// ReLU, and length-2/stride-2 max pooling in ceil mode; the flattened output
/// feeds one affine layer with softmax. The fully connected baseline runs the
/// input through affine+ReLU hidden layers instead.
struct ArchitectureSpec {
  ModelKind kind = ModelKind::Cnn;
  int input_length = 0;
  std::vector<ConvLayerSpec> conv;
  std::vector<int> hidden{32, 16};
  int num_classes = 0;

  void validate() const;
  /// Length sequence input, conv out, pool out, ..., flattened, classes.
  std::vector<int> shape_chain() const;
  int flattened_length() const;
};

ArchitectureSpec cnn_architecture(int input_length, int num_classes);
ArchitectureSpec nn_architecture(int input_length, int num_classes);

std::size_t param_count(const ArchitectureSpec& arch);

struct Model {
  ArchitectureSpec arch;
  std::vector<double> theta;  // flat parameters, layout per param_count
  // Present when the model was trained on standardized features; applied to
  // every input before the forward pass and persisted with the model.
  std::optional<FeatureScaler> scaler;
};

Model init_model(const ArchitectureSpec& arch, std::uint64_t seed);

struct Prediction {
  RVector probabilities;
  std::vector<int> ranking;  // classes by descending probability, ties by index
};

Prediction forward(const Model& model, const RVector& x);
Prediction predict(const Model& model, const RVector& x);

/// Mean negative log-likelihood over the batch plus lambda * ||theta||^2.
double loss(const Model& model, const LabeledSet& batch, double lambda);

/// Exact gradient of `loss` with respect to every parameter.
std::vector<double> backward(const Model& model, const LabeledSet& batch,
                             double lambda);

struct TrainConfig {
  double lambda = 0.001;
  double learning_rate = 0.001;
  double rmsprop_decay = 0.9;  // alpha
  int check_period = 1000;     // p
  int patience = 4;            // p*
  int batch_size = 32;
  std::int64_t max_steps = 50000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainHistoryEntry {
  std::int64_t step = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

/// Validation-loss tracker: an improving check resets the streak, and the
/// run stops once the streak exceeds the patience.
struct EarlyStopper {
  explicit EarlyStopper(int patience_checks) : patience(patience_checks) {}

  struct Decision {
    bool improved = false;
    bool stop = false;
  };

  Decision observe(double val_loss) {
    Decision decision;
    if (val_loss < best) {
      best = val_loss;
      streak = 0;
      decision.improved = true;
    } else {
      decision.stop = ++streak > patience;
    }
    return decision;
  }

  int patience = 0;
  double best = std::numeric_limits<double>::infinity();
  int streak = 0;
};

struct TrainResult {
  Model model;  // parameters at the best validation checkpoint
  std::vector<TrainHistoryEntry> history;
  double best_val_loss = 0.0;
  std::int64_t stopped_step = 0;
  bool early_stopped = false;
};

/// RMSprop on minibatches with validation-tracked early stopping: the
/// validation loss is checked every `check_period` steps, a non-improving
/// streak longer than `patience` terminates, and the returned parameters are
/// the best checkpoint seen.
TrainResult train(const ArchitectureSpec& arch, const LabeledSet& train_set,
                  const LabeledSet& val_set, const TrainConfig& config);

/// The two-hidden-layer fully connected baseline (input -> 32 -> 16 ->
/// classes) under the same loss, optimizer, and early stopping as the CNN.
TrainResult train_nn_baseline(const LabeledSet& train_set,
                              const LabeledSet& val_set,
                              const TrainConfig& config);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

void save_history_csv(const std::vector<TrainHistoryEntry>& history,
                      const std::filesystem::path& path);

}  // namespace gridfault
