// Dense layer kernels over row-major Matrix storage, backed by Eigen.
#pragma once

#include <vector>

#include <Eigen/Core>

#include "chromaeeg/matrix.hpp"

namespace chromaeeg::dense {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;
using MapVec = Eigen::Map<Eigen::VectorXd>;

inline CMapMat view(const Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}
inline MapMat view(Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

// out (m x o) = in (m x i) * W^T + b, W stored o x i.
inline void affine(const Matrix& in, const Matrix& w, const std::vector<double>& b, Matrix& out) {
  out = Matrix(in.rows(), w.rows());
  auto o = view(out);
  o.noalias() = view(in) * view(w).transpose();
  o.rowwise() += CMapVec(b.data(), static_cast<Eigen::Index>(b.size())).transpose();
}

// Weight and bias gradients of one layer from dLoss/dz (delta) and its input.
inline void layer_grad(const Matrix& delta, const Matrix& in, Matrix& gw, std::vector<double>& gb) {
  gw = Matrix(delta.cols(), in.cols());
  view(gw).noalias() = view(delta).transpose() * view(in);
  gb.assign(delta.cols(), 0.0);
  MapVec(gb.data(), static_cast<Eigen::Index>(gb.size())) = view(delta).colwise().sum().transpose();
}

// dLoss/d(input) = delta * W, before the activation derivative.
inline Matrix back(const Matrix& delta, const Matrix& w) {
  Matrix prev(delta.rows(), w.cols());
  view(prev).noalias() = view(delta) * view(w);
  return prev;
}

}  // namespace chromaeeg::dense
