#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace bwdep {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;
using VectorXi = Eigen::VectorXi;
using MaskXb = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Exit-code families used by the CLI: input problems map to 2, numerical ones to 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};
struct DegenerateError : NumericalError {
  using NumericalError::NumericalError;
};
struct TiedSpectrumError : NumericalError {
  using NumericalError::NumericalError;
};
struct SingularityError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace bwdep
