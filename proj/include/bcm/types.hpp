#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bcm {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;
using Mat = Eigen::MatrixXcd;

// Error hierarchy mirrored by the CLI exit codes: invalid input -> 2,
// empty spectrum -> 3, decomposition breakdown -> 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& what) : Error(what) {}
};

class NoSpectrumError : public Error {
 public:
  explicit NoSpectrumError(const std::string& what) : Error(what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what) {}
};

}  // namespace bcm
