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

#include "agridp/annotated_csv.h"

#include <cmath>
#include <fstream>
#include <vector>

#include "absl/strings/match.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "agridp/data.h"

namespace agridp {

absl::Status WriteAnnotatedCsv(const std::string& path,
                               const AnnotatedCsv& csv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path));
  out << "# " << csv.header.dump() << "\n";
  for (std::size_t c = 0; c < csv.values.cols(); ++c) {
    if (c > 0) out << ',';
    out << "pc" << (c + 1);
  }
  out << "\n";
  for (std::size_t r = 0; r < csv.values.rows(); ++r) {
    for (std::size_t c = 0; c < csv.values.cols(); ++c) {
      if (c > 0) out << ',';
      out << FormatDouble(csv.values(r, c));
    }
    out << "\n";
  }
  if (!out) return absl::InternalError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

absl::StatusOr<AnnotatedCsv> ReadAnnotatedCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::string line;
  if (!std::getline(in, line) || !absl::StartsWith(line, "# ")) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": missing '# {json}' header line"));
  }
  AnnotatedCsv csv;
  csv.header = nlohmann::json::parse(line.substr(2), nullptr, false);
  if (csv.header.is_discarded() || !csv.header.is_object()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": header comment is not a JSON object"));
  }
  if (!std::getline(in, line)) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": missing column row"));
  }
  const std::size_t cols =
      std::vector<std::string>(absl::StrSplit(line, ',')).size();
  csv.values = Matrix(0, cols);
  std::size_t row = 0;
  std::vector<double> values(cols);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    std::vector<std::string> cells = absl::StrSplit(line, ',');
    if (cells.size() != cols) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ": row ", row, " has ", cells.size(), " cells"));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!absl::SimpleAtod(cells[c], &values[c]) || !std::isfinite(values[c])) {
        return absl::InvalidArgumentError(absl::StrCat(
            path, ": unparsable value '", cells[c], "' at row ", row,
            ", column ", c + 1));
      }
    }
    csv.values.AppendRow(values);
  }
  return csv;
}

}  // namespace agridp
