#pragma once

#include <Eigen/Core>

namespace flipbench {

// Square operand storage. Row-major so that element (i, j) lives at flat
// index i * N + j, which is the layout the generators and the entropy
// statistics are defined over.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = RowMatrix<double>;

}  // namespace flipbench
