// Copyright 2026 The ehrablate Authors
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
//
// L2-regularized logistic regression. The objective is the sum of negative
// log-likelihoods plus lambda * ||w||^2 over the feature weights; the
// intercept is not penalized. Minimized with L-BFGS (memory 10) and Armijo
// backtracking from a zero start, which makes training deterministic for a
// given matrix, row subset and config.

#ifndef EHRABLATE_CLASSIFIER_HPP_
#define EHRABLATE_CLASSIFIER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "ehrablate/event_model.hpp"

namespace ehrablate {

struct TrainConfig {
  double lambda = 1.0;
  size_t max_iterations = 500;
  double gradient_tolerance = 1e-6;
  // Optional seeded uniform(-init_scale, init_scale) start instead of zero.
  // Off by default; exists so tests can confirm different starts reach the
  // same optimum of the convex objective.
  uint64_t seed = 0;
  double init_scale = 0.0;
};

struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
  double lambda = 1.0;
  uint64_t feature_signature = 0;
  bool converged = false;
  size_t iterations = 0;
  // Objective after the start point and after each accepted step.
  std::vector<double> objective_trace;
};

// Training objective at the given parameters. grad_weights (size = columns)
// and grad_intercept receive the gradient when grad_weights is non-empty.
// labels run parallel to rows.
double objective_and_gradient(std::span<const double> weights, double intercept,
                              double lambda, const FeatureMatrix& m,
                              std::span<const uint32_t> rows,
                              std::span<const uint8_t> labels,
                              std::span<double> grad_weights,
                              double& grad_intercept);

double objective(const LogisticModel& model, const FeatureMatrix& m,
                 std::span<const uint32_t> rows,
                 std::span<const uint8_t> labels);

// Fits on the given rows (labels parallel to rows). The subset must contain
// both classes. Non-convergence within max_iterations is not an error; the
// model records converged = false.
LogisticModel train(const FeatureMatrix& m, std::span<const uint32_t> rows,
                    std::span<const uint8_t> labels,
                    const TrainConfig& config = {});

// Case probabilities for the given rows. The matrix must carry the same
// feature signature the model was trained on.
std::vector<double> predict(const LogisticModel& model, const FeatureMatrix& m,
                            std::span<const uint32_t> rows);

void write_model(const LogisticModel& model, const std::filesystem::path& path,
                 std::string_view comment_header);
LogisticModel read_model(const std::filesystem::path& path);

}  // namespace ehrablate

#endif  // EHRABLATE_CLASSIFIER_HPP_
