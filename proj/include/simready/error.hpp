// Copyright 2026 The simready Authors
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

#ifndef SIMREADY_ERROR_HPP_
#define SIMREADY_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace simready {

// Base of every exception thrown by the library. Each module derives a
// typed error carrying a Kind enum so callers can branch without string
// matching.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

template <typename KindT>
class KindedError : public Error {
 public:
  using Kind = KindT;

  KindedError(Kind kind, const std::string& what)
      : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace simready

#endif  // SIMREADY_ERROR_HPP_
