// Copyright 2026 The agridp Authors
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

#ifndef AGRIDP_ANNOTATED_CSV_H_
#define AGRIDP_ANNOTATED_CSV_H_

#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "agridp/matrix.h"
#include "json.hpp"

namespace agridp {

// Numeric CSV whose first line is "# " followed by a compact JSON object.
// Columns are named pc1..pck.
struct AnnotatedCsv {
  nlohmann::json header;
  Matrix values;
};

absl::Status WriteAnnotatedCsv(const std::string& path,
                               const AnnotatedCsv& csv);
absl::StatusOr<AnnotatedCsv> ReadAnnotatedCsv(const std::string& path);

}  // namespace agridp

#endif  // AGRIDP_ANNOTATED_CSV_H_
