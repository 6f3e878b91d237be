#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chromaeeg/matrix.hpp"
#include "chromaeeg/models.hpp"

namespace chromaeeg::reduce {

inline constexpr std::size_t kDefaultSubsetSize = 10;

// ---- greedy forward selection -------------------------------------------------

struct FeatureSubset {
  std::vector<std::size_t> indices;  // selection order
  std::vector<std::string> names;
  std::vector<double> trace;         // CV macro-F1 after each addition

  Matrix apply(const Matrix& x) const { return x.select_cols(indices); }
};

/// Wrapper used when none is given: L2 logistic regression with a capped
/// iteration budget, cheap enough to be refitted for every candidate.
models::ModelSpec default_wrapper(std::uint64_t seed = 0);

/// Cross-validated macro-F1 of `spec` trained on the given columns. Folds come
/// from a stratified split seeded with `seed`, the same split for every call.
double subset_cv_f1(const Matrix& x, std::span<const int> y, std::span<const std::size_t> columns,
                    const models::ModelSpec& spec, int folds, std::uint64_t seed,
                    int n_classes = models::kDefaultClassCount);

/// Adds, one at a time, the column whose addition gives the best CV macro-F1;
/// ties go to the lowest column index.
FeatureSubset forward_select(const Matrix& x, std::span<const int> y, std::span<const std::string> names,
                             const models::ModelSpec& wrapper, std::size_t k, int folds, std::uint64_t seed,
                             int n_classes = models::kDefaultClassCount);

/// Text manifest: one `index,name,score` line per step after a header.
std::string serialize_subset(const FeatureSubset& s);
FeatureSubset parse_subset(std::string_view text);

// ---- autoencoder ---------------------------------------------------------------

struct AutoencoderConfig {
  std::vector<int> hidden{32};  // encoder hidden widths; the decoder mirrors them
  int latent = 10;
  int epochs = 200;
  double learning_rate = 0.01;
  int batch_size = 32;
  std::uint64_t seed = 0;
  /// Share of the epochs (at the end) run as full-batch descent with a
  /// backtracking line search, so the loss cannot increase there.
  double polish_fraction = 0.1;
};

/// Tanh on every hidden layer including the code, linear reconstruction.
struct AutoencoderModel {
  std::vector<int> layer_sizes;             // e.g. 86, 32, 10, 32, 86
  std::vector<Matrix> weights;              // layer l: out x in
  std::vector<std::vector<double>> biases;
  AutoencoderConfig config;
  std::vector<double> loss_curve;           // full-data MSE after each epoch
  double final_mse = 0.0;

  std::size_t encoder_layers() const { return weights.size() / 2; }
};

/// Symmetric uniform initialisation scaled by fan-in.
AutoencoderModel autoencoder_init(int input_width, const AutoencoderConfig& cfg);

/// Mean squared reconstruction error over all entries. Fills `grad` (same
/// shapes as the model) when non-null.
double autoencoder_objective(const AutoencoderModel& m, const Matrix& x, AutoencoderModel* grad);

/// Expects z-scored input. Throws NonFiniteLoss when training diverges.
AutoencoderModel autoencoder_train(const Matrix& x, const AutoencoderConfig& cfg);

/// Encoder half only; rows x latent.
Matrix autoencoder_encode(const AutoencoderModel& m, const Matrix& x);
Matrix autoencoder_reconstruct(const AutoencoderModel& m, const Matrix& x);

inline constexpr int kAutoencoderFormatVersion = 1;
std::string autoencoder_to_json(const AutoencoderModel& m);
AutoencoderModel autoencoder_from_json(std::string_view text);

}  // namespace chromaeeg::reduce
