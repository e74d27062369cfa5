// Copyright 2026 The cavsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CAVSENSE_COMMON_HPP
#define CAVSENSE_COMMON_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cavsense {

using cplx = std::complex<double>;
using Index = Eigen::Index;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RealVec = Eigen::VectorXd;
using RealMat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition or parameter range was violated. The CLI maps this to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Requested Hilbert space exceeds the configured memory cap.
class SpaceTooLarge : public Error {
 public:
  using Error::Error;
};

/// Fock cutoff cannot hold the state (norm deficit or tail population too large).
class CutoffError : public Error {
 public:
  using Error::Error;
};

/// Time integration failed: step-size underflow, step budget, or stiffness.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// Observable response is too flat to estimate a sensitivity.
class InsensitiveObservable : public Error {
 public:
  using Error::Error;
};

/// A scan grid has no interior minimum to refine.
class NotBracketed : public Error {
 public:
  using Error::Error;
};

}  // namespace cavsense

#endif  // CAVSENSE_COMMON_HPP
