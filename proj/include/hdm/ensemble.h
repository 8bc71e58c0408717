/*
 * Copyright 2026 The HDM Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <span>
#include <string>
#include <vector>

#include "hdm/probability.h"
#include "json.hpp"

namespace hdm {

inline constexpr double kDefaultWeightFloor = 1e-6;

// w_m proportional to max(score_m, floor), normalized to sum 1.
std::vector<double> WeightsFromScores(std::span<const double> scores,
                                      double floor = kDefaultWeightFloor);

// Row-wise convex combination. Throws kEmptyEnsemble, kShapeMismatch (also
// when class lists differ).
ProbabilityTable Combine(std::span<const ProbabilityTable> members, std::span<const double> weights,
                         int threads = 1);

struct RowUncertainty {
  double entropy = 0.0;        // nats, of the combined row
  double disagreement = 0.0;   // mean pairwise Jensen-Shannon divergence, nats; 0 for one member
};

double Entropy(std::span<const double> p);
double JensenShannon(std::span<const double> p, std::span<const double> q);

std::vector<RowUncertainty> Uncertainty(const ProbabilityTable& combined,
                                        std::span<const ProbabilityTable> members);

struct EnsembleMember {
  std::string name;
  std::string path;
  double score = 0.0;
  double weight = 0.0;
};

struct EnsembleManifest {
  double floor = kDefaultWeightFloor;
  std::vector<EnsembleMember> members;

  // Fills member weights from their scores.
  void AssignWeights();
  nlohmann::json ToJson() const;
  static EnsembleManifest FromJson(const nlohmann::json& j);
};

}  // namespace hdm
