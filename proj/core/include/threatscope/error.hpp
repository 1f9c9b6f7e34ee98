// Copyright 2026 The Threatscope Authors
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

#ifndef THREATSCOPE_ERROR_HPP_
#define THREATSCOPE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace threatscope {

// Bad inputs to an operation: out-of-range index, shape mismatch,
// single-class training set, malformed record, and the like.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what)
      : std::invalid_argument(what) {}
};

// Bad run configuration: missing files, inconsistent split counts,
// unknown option values. The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Unparseable file content, reported with line context where available.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace threatscope

#endif  // THREATSCOPE_ERROR_HPP_
