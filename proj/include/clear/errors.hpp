// Copyright 2026 The CLEAR Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace clear {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-domain input values (empty matrices, NaNs, ...).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Shape mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidRankError : public Error {
 public:
  using Error::Error;
};

class InvalidStrengthError : public Error {
 public:
  using Error::Error;
};

/// Binary container or matrix file could not be decoded.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Dataset files are missing, malformed or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Run configuration failed schema validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite value. `what()` carries the diagnostic dump.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace clear
