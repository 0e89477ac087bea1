// Copyright 2026 The voxtrait Authors
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

#include <optional>
#include <string>
#include <vector>

#include "voxtrait/cluster.hpp"

namespace voxtrait::svg {

/// Leaves along the bottom, merge height upward; a dashed line marks the cut
/// that yields `cut_k` clusters.
std::string dendrogram(const cluster::Dendrogram& d, std::optional<std::size_t> cut_k = std::nullopt);

struct Series {
  std::string name;
  std::vector<double> y;  // NaN/inf points are skipped
};

std::string line_chart(const std::string& title, const std::string& x_label, const std::vector<double>& x,
                       const std::vector<Series>& series, std::optional<double> reference = std::nullopt);

std::string pie(const std::string& title, const std::vector<std::string>& labels, const std::vector<double>& weights);

void write(const std::string& path, const std::string& svg);

}  // namespace voxtrait::svg
