#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace aois {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Thrown when a matrix fails a numerical precondition (e.g. an
/// interference-plus-noise matrix that is not positive definite).
class NumericalError : public std::runtime_error {
  public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a configuration value violates its contract.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a constrained subproblem has no feasible point.
class InfeasibleError : public std::runtime_error {
  public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace aois
