// Copyright 2026 The polval Authors
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

#ifndef POLVAL_ERRORS_HPP_
#define POLVAL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace polval {

// Base of every error raised by the library. The C API maps each subclass
// onto one status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid numeric argument (log of a non-positive value, zero exponent...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration: missing covariate, bad K, unknown outcome.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or unusable input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Singular design matrix in a regression.
class SingularDesignError : public DataError {
 public:
  using DataError::DataError;
};

// Estimation could not proceed (e.g. no treated units in a node sample).
class EstimationError : public Error {
 public:
  using Error::Error;
};

// No optimizer start met the convergence criteria.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Operation requires state that has not been computed yet.
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace polval

#endif  // POLVAL_ERRORS_HPP_
