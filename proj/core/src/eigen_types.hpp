#pragma once

#include <Eigen/Core>

namespace ilens::detail {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <typename T>
using ConstMatMap = Eigen::Map<const Mat<T>>;
template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using ConstRowMap = Eigen::Map<const RowVec<T>>;
template <typename T>
using RowMap = Eigen::Map<RowVec<T>>;

}  // namespace ilens::detail
