#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace heterofisher {

using Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;

/// Malformed input file (bad magic, truncated payload, dimension mismatch).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric failure inside the pipeline (non-finite intermediate, unusable model).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A node whose class statistics cannot support the criterion (zero variance).
class DegenerateNodeError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace heterofisher
