// Copyright 2026 The APFEx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace apfex {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Array or matrix dimensions disagree with what an operation expects.
class ShapeError : public Error {
public:
    ShapeError(const std::string& what, std::ptrdiff_t expected, std::ptrdiff_t actual)
        : Error(what + ": expected " + std::to_string(expected) + ", got " + std::to_string(actual)),
          expected_(expected), actual_(actual) {}

    std::ptrdiff_t expected() const noexcept { return expected_; }
    std::ptrdiff_t actual() const noexcept { return actual_; }

private:
    std::ptrdiff_t expected_;
    std::ptrdiff_t actual_;
};

/// A loss, gradient or parameter became NaN or infinite.
class NumericError : public Error {
public:
    NumericError(const std::string& component, const std::string& detail)
        : Error("non-finite value in " + component + ": " + detail), component_(component) {}

    const std::string& component() const noexcept { return component_; }

private:
    std::string component_;
};

/// An argument is outside its admissible domain (e.g. a non-positive band width).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Fewer than two usable groups remain for a disparity computation.
class DegenerateGroupingError : public Error {
public:
    using Error::Error;
};

/// Input data violates a documented invariant (e.g. code out of range).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Table or schema mismatch while ingesting data.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A diagnostic was asked for with too little data to compute it.
class DiagnosticError : public Error {
public:
    using Error::Error;
};

/// A model snapshot could not be written or read back.
class SnapshotError : public Error {
public:
    using Error::Error;
};

}  // namespace apfex
