/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The umbir authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef UMBIR_ERRORS_HPP
#define UMBIR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace umbir {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or input failed validation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Snell's law admits no transmitted ray into the next layer.
class TotalInternalReflection : public Error {
 public:
  using Error::Error;
};

/// The voxel lies outside the refraction-limited aperture of an endpoint.
class Unreachable : public Error {
 public:
  using Error::Error;
};

class GammaOutOfRange : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// The solver produced a non-finite objective.
class SolverDivergence : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

inline void require_dims(bool condition, const std::string& message) {
  if (!condition) throw DimensionMismatch(message);
}

}  // namespace detail
}  // namespace umbir

#endif  // UMBIR_ERRORS_HPP
