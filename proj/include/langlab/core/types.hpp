#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace langlab {

using Scalar = double;
using Index = Eigen::Index;

using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
// Row-major so flat buffers and on-disk layouts agree with Map views.
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;

}  // namespace langlab
