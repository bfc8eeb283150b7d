#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace uhd {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// One encoder layer's embeddings for a token sequence: tokens x hidden.
template <typename Scalar = float>
struct DenseTokenMatrix {
  std::uint32_t layer = 1;
  RowMatrix<Scalar> values;

  Eigen::Index token_count() const { return values.rows(); }
  Eigen::Index hidden_size() const { return values.cols(); }
};

}  // namespace uhd
