// Copyright 2026 The ctrace Authors
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

#ifndef CTRACE_COMMON_H_
#define CTRACE_COMMON_H_

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctrace {

using NodeId = std::int32_t;
using EdgeId = std::int32_t;

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on the arguments of an operation does not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed input file. The message names the file and line.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A policy or solver broke a hard contract (budget, group budget, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// The simplex engine lost numerical control of the basis.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Demographic labels (age groups). The set is closed.
enum class Label : std::uint8_t {
  kPreschool = 0,  // p, 0-4
  kSchool = 1,     // s, 5-17
  kAdult = 2,      // a, 18-49
  kOlder = 3,      // o, 50-64
  kGolden = 4,     // g, 65+
};

inline constexpr int kNumLabels = 5;
inline constexpr std::array<Label, kNumLabels> kAllLabels = {
    Label::kPreschool, Label::kSchool, Label::kAdult, Label::kOlder,
    Label::kGolden};

template <typename T>
using PerLabel = std::array<T, kNumLabels>;

constexpr int label_index(Label l) { return static_cast<int>(l); }

char label_code(Label l);

// Accepts the one-letter codes p, s, a, o, g.
Label parse_label(std::string_view code);

// Base compliance rate per age group.
inline constexpr PerLabel<double> kBaseCompliance = {0.75, 0.80, 0.60, 0.85,
                                                     0.80};

// Population fractions per age group for the two reference counties. The
// Albemarle row sums to 1.01 as published; normalize it before sampling.
inline constexpr PerLabel<double> kMontgomeryFractions = {0.05, 0.15, 0.43,
                                                          0.21, 0.16};
inline constexpr PerLabel<double> kAlbemarleFractions = {0.03, 0.11, 0.49,
                                                         0.23, 0.15};

}  // namespace ctrace

#endif  // CTRACE_COMMON_H_
