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

// Average-linkage merge traces frozen from an independent UPGMA
// implementation (tests/oracles/linkage_fixtures.py). Merges are
// (smaller id, larger id, distance); new clusters take ids n, n+1, ...

#include <string>
#include <vector>

namespace voxtrait::testing {

struct FrozenMerge {
  std::size_t a, b;
  double distance;
};

struct LinkageFixture {
  std::string name;
  bool correlation;  // matrix holds correlations, not distances
  std::vector<std::vector<double>> matrix;
  std::vector<FrozenMerge> merges;
};

inline const std::vector<LinkageFixture>& linkage_fixtures() {
  static const std::vector<LinkageFixture> fixtures{
      {"dist4",
       false,
       {{0, .3, .9, 1}, {.3, 0, .8, .7}, {.9, .8, 0, .45}, {1, .7, .45, 0}},
       {{0, 1, 0.3}, {2, 3, 0.45}, {4, 5, 0.85000000000000009}}},
      {"dist5",
       false,
       {{0, .2, .6, 1.1, .9}, {.2, 0, .5, 1.3, .75}, {.6, .5, 0, .95, .4}, {1.1, 1.3, .95, 0, .85}, {.9, .75, .4, .85, 0}},
       {{0, 1, 0.2}, {2, 4, 0.4}, {5, 6, 0.6875}, {3, 7, 1.05}}},
      {"dist6",
       false,
       {{0, .15, .7, .8, 1.2, 1.05},
        {.15, 0, .65, .9, 1.15, 1.0},
        {.7, .65, 0, .25, .95, .85},
        {.8, .9, .25, 0, .88, .92},
        {1.2, 1.15, .95, .88, 0, .35},
        {1.05, 1.0, .85, .92, .35, 0}},
       {{0, 1, 0.15}, {2, 3, 0.25}, {4, 5, 0.35}, {6, 7, 0.76250000000000007}, {8, 9, 1}}},
      {"corr5",
       true,
       {{1, .92, .35, -.10, .05},
        {.92, 1, .30, -.15, .12},
        {.35, .30, 1, .55, -.40},
        {-.10, -.15, .55, 1, -.62},
        {.05, .12, -.40, -.62, 1}},
       {{0, 1, 0.15066519173319357},
        {3, 4, 0.56098128311022999},
        {2, 6, 0.82712322679561456},
        {5, 7, 1.4824491251725407}}},
      {"corr6",
       true,
       {{1, .97, .88, .10, -.05, .20},
        {.97, 1, .85, .12, -.02, .25},
        {.88, .85, 1, .05, .10, .30},
        {.10, .12, .05, 1, .75, -.45},
        {-.05, -.02, .10, .75, 1, -.50},
        {.20, .25, .30, -.45, -.50, 1}},
       {{0, 1, 0.080622577482985527},
        {2, 6, 0.24994855238192384},
        {3, 4, 0.37749172176353751},
        {5, 8, 0.85494047197192136},
        {7, 9, 1.7725830667704692}}},
  };
  return fixtures;
}

}  // namespace voxtrait::testing
