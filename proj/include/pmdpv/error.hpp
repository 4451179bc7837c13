// Copyright 2026 The pmdp-verify Authors
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

namespace pmdpv {

/// Base class of every error raised by the library. The C API maps each
/// subclass onto a status code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (model file, property, trace line, JSON).
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0, int column = 0)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ", column " +
                               std::to_string(column) + ")"
                         : what),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Well-formed input that violates a model or domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Iterative numerics that failed to converge, or sampling that ran out of retries.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A configured size limit was exceeded (strategy enumeration cap, etc.).
class LimitError : public Error {
public:
    using Error::Error;
};

} // namespace pmdpv
