// Copyright 2026 The divface Authors
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

#ifndef DIVFACE__ERROR_HPP_
#define DIVFACE__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace divface
{

/// Bad input: malformed files, dimension mismatches, violated preconditions.
/// The CLI maps it to exit status 2.
class InputError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Numeric failure: divergence, non-finite losses, rank collapse.
/// The CLI maps it to exit status 1.
class NumericError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Throws InputError with `what` when `condition` is false.
inline void require(bool condition, const std::string & what)
{
  if (!condition) {
    throw InputError(what);
  }
}

}  // namespace divface

#endif  // DIVFACE__ERROR_HPP_
