#pragma once

#include <cstdint>
#include <span>

#include "chromaeeg/matrix.hpp"
#include "chromaeeg/models.hpp"

// Per-family training and scoring; models.cpp dispatches on the spec variant.
namespace chromaeeg::models::detail {

KnnModel fit_knn(const KnnParams& p, const Matrix& x, std::span<const int> y);
Matrix knn_scores(const KnnModel& m, const Matrix& x, int n_classes);

LogisticModel fit_logistic(const LogisticParams& p, const Matrix& x, std::span<const int> y, int n_classes);
Matrix logistic_scores(const LogisticModel& m, const Matrix& x);

ForestModel fit_forest(const ForestParams& p, const Matrix& x, std::span<const int> y, int n_classes,
                       std::uint64_t seed);
Matrix forest_scores(const ForestModel& m, const Matrix& x, int n_classes);

MlpModel fit_mlp(const MlpParams& p, const Matrix& x, std::span<const int> y, int n_classes, std::uint64_t seed);
Matrix mlp_scores(const MlpModel& m, const Matrix& x);

SvmModel fit_svm(const SvmParams& p, const Matrix& x, std::span<const int> y, int n_classes);

BoostModel fit_boosting(const BoostParams& p, const Matrix& x, std::span<const int> y, int n_classes);
Matrix boosting_scores(const BoostModel& m, const Matrix& x);

/// Numerically stable softmax in place.
void softmax_inplace(std::span<double> z);
void softmax_rows(Matrix& z);

}  // namespace chromaeeg::models::detail
