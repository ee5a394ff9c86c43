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

#include "ctrace/common.h"

namespace ctrace {

char label_code(Label l) {
  static constexpr char kCodes[kNumLabels] = {'p', 's', 'a', 'o', 'g'};
  return kCodes[label_index(l)];
}

Label parse_label(std::string_view code) {
  if (code.size() == 1) {
    switch (code[0]) {
      case 'p': return Label::kPreschool;
      case 's': return Label::kSchool;
      case 'a': return Label::kAdult;
      case 'o': return Label::kOlder;
      case 'g': return Label::kGolden;
      default: break;
    }
  }
  throw InvalidArgument("unknown label '" + std::string(code) + "'");
}

}  // namespace ctrace
