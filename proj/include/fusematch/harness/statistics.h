// Copyright 2026 Fusematch Contributors
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


#ifndef FUSEMATCH_HARNESS_STATISTICS_H
#define FUSEMATCH_HARNESS_STATISTICS_H

#include <cstdint>
#include <string>
#include <vector>

namespace fm {

/// Probability of an odd number of logical errors after `t` cycles at
/// error-per-cycle `epsilon`: (1 - (1 - 2 epsilon)^t) / 2.
double logical_error_probability(double epsilon, double t);

/// Inverse of logical_error_probability. Throws std::invalid_argument for
/// p_L outside [0, 0.5) or t < 1.
double one_point_epsilon(double p_L, double t);

struct FitPoint {
    double cycles = 0;
    double p_L = 0;
    uint64_t shots = 0;
};

struct FitResult {
    double epsilon = 0;
    double sigma = 0;
    /// Slope of ln(1 - 2 p_L) against cycles, and its standard error.
    double slope = 0;
    double slope_sigma = 0;
    double intercept = 0;
    double reduced_chi2 = 0;
    size_t points_used = 0;
    std::string label;
};

struct FitOptions {
    /// Points with fewer cycles are ignored.
    double min_cycles = 0;
};

/// Weighted least squares of y = ln(1 - 2 p_L) against t with an intercept.
/// Each point's variance comes from its binomial standard error propagated
/// through y, with p_L floored at 0.5/shots so zero-error points keep a
/// finite weight. The slope variance is inflated by max(1, reduced chi^2).
/// A single usable point is fitted through the origin, which reproduces
/// one_point_epsilon.
FitResult fit_epsilon(const std::vector<FitPoint> &points, FitOptions options = {});

struct LambdaPoint {
    uint32_t distance = 0;
    double epsilon = 0;
    double sigma = 0;
};

struct LambdaResult {
    double lambda = 0;
    double delta = 0;
    double slope = 0;
    double slope_sigma = 0;
};

/// Regression of ln(epsilon_d) against (d + 1) / 2; Lambda = e^-m and
/// delta Lambda = e^-m * delta m. Weighted by 1/sigma(ln epsilon)^2 when
/// every point has a positive sigma, ordinary least squares otherwise.
LambdaResult compute_lambda(const std::vector<LambdaPoint> &fits);

}  // namespace fm

#endif  // FUSEMATCH_HARNESS_STATISTICS_H
