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
#include <vector>

#include "hdm/learners.h"

namespace hdm::detail {

// Row-wise softmax restricted to the seen classes; others get 0.
void MaskedSoftmax(std::span<double> row, const std::vector<bool>& seen);

ForestModel FitForest(const LearnerConfig& config, const Matrix& X, std::span<const int> y,
                      std::size_t num_classes, std::span<const double> class_weight, int threads);
Matrix PredictForest(const ForestModel& model, const Matrix& X, std::size_t num_classes,
                     int threads);

BoostingModel FitBoosting(const LearnerConfig& config, const Matrix& X, std::span<const int> y,
                          const std::vector<bool>& seen, std::span<const double> class_weight,
                          int threads);
Matrix PredictBoosting(const BoostingModel& model, const Matrix& X, const std::vector<bool>& seen,
                       int threads);

MlpModel FitMlp(const LearnerConfig& config, const Matrix& X, const FeatureSchema& schema,
                std::span<const int> y, const std::vector<bool>& seen, int threads);
Matrix PredictMlp(const MlpModel& model, const Matrix& X, const std::vector<bool>& seen,
                  int threads);

}  // namespace hdm::detail
