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


#include "fusematch/harness/statistics.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace fm {

namespace {

struct LineFit {
    double slope = 0;
    double intercept = 0;
    double slope_variance = 0;
    double chi2 = 0;
};

/// Least squares line through (x, y) with weights w (all ones for OLS).
LineFit fit_line(const std::vector<double> &x, const std::vector<double> &y, const std::vector<double> &w) {
    double sw = 0, sx = 0, sy = 0;
    for (size_t i = 0; i < x.size(); i++) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double mx = sx / sw;
    const double my = sy / sw;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); i++) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0)) {
        throw std::invalid_argument("regression needs at least two distinct x values");
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (size_t i = 0; i < x.size(); i++) {
        double r = y[i] - (f.intercept + f.slope * x[i]);
        f.chi2 += w[i] * r * r;
    }
    f.slope_variance = 1 / sxx;
    return f;
}

}  // namespace

double logical_error_probability(double epsilon, double t) {
    return -0.5 * std::expm1(t * std::log1p(-2 * epsilon));
}

double one_point_epsilon(double p_L, double t) {
    if (!(p_L >= 0 && p_L < 0.5)) {
        throw std::invalid_argument("one_point_epsilon needs 0 <= p_L < 0.5");
    }
    if (!(t >= 1)) {
        throw std::invalid_argument("one_point_epsilon needs t >= 1");
    }
    if (t == 1) {
        return p_L;
    }
    // -expm1(log1p(-2p)/t)/2 keeps full precision for small p_L.
    return -0.5 * std::expm1(std::log1p(-2 * p_L) / t);
}

FitResult fit_epsilon(const std::vector<FitPoint> &points, FitOptions options) {
    std::vector<double> x, y, w;
    for (const auto &p : points) {
        if (p.cycles < options.min_cycles || !(p.p_L < 0.5) || p.p_L < 0 || p.shots == 0) {
            continue;
        }
        const double n = (double)p.shots;
        const double p_eff = std::max(p.p_L, 0.5 / n);
        const double sigma_p = std::sqrt(p_eff * (1 - p_eff) / n);
        const double sigma_y = 2 * sigma_p / (1 - 2 * p.p_L);
        x.push_back(p.cycles);
        y.push_back(std::log1p(-2 * p.p_L));
        w.push_back(1 / (sigma_y * sigma_y));
    }
    if (x.empty()) {
        throw std::invalid_argument("fit_epsilon: no usable points (all p_L >= 0.5 or below min_cycles)");
    }
    FitResult r;
    r.points_used = x.size();
    if (x.size() == 1) {
        r.slope = y[0] / x[0];
        r.slope_sigma = 1 / (std::sqrt(w[0]) * x[0]);
        r.intercept = 0;
    } else {
        LineFit f = fit_line(x, y, w);
        r.slope = f.slope;
        r.intercept = f.intercept;
        double inflation = 1;
        if (x.size() > 2) {
            r.reduced_chi2 = f.chi2 / (double)(x.size() - 2);
            inflation = std::max(1.0, r.reduced_chi2);
        }
        r.slope_sigma = std::sqrt(f.slope_variance * inflation);
    }
    r.epsilon = -0.5 * std::expm1(r.slope);
    r.sigma = 0.5 * std::exp(r.slope) * r.slope_sigma;
    return r;
}

LambdaResult compute_lambda(const std::vector<LambdaPoint> &fits) {
    std::set<uint32_t> distances;
    for (const auto &f : fits) {
        distances.insert(f.distance);
        if (!(f.epsilon > 0)) {
            throw std::invalid_argument("compute_lambda needs positive epsilon values");
        }
    }
    if (distances.size() < 2) {
        throw std::invalid_argument("compute_lambda needs at least two distinct distances");
    }
    const bool weighted = std::all_of(fits.begin(), fits.end(), [](const LambdaPoint &f) {
        return f.sigma > 0;
    });
    std::vector<double> x, y, w;
    for (const auto &f : fits) {
        x.push_back((f.distance + 1) / 2.0);
        y.push_back(std::log(f.epsilon));
        double sigma_y = f.sigma / f.epsilon;
        w.push_back(weighted ? 1 / (sigma_y * sigma_y) : 1.0);
    }
    LineFit line = fit_line(x, y, w);
    LambdaResult r;
    r.slope = line.slope;
    if (weighted) {
        r.slope_sigma = std::sqrt(line.slope_variance);
    } else if (x.size() > 2) {
        r.slope_sigma = std::sqrt(line.slope_variance * line.chi2 / (double)(x.size() - 2));
    }
    r.lambda = std::exp(-r.slope);
    r.delta = r.lambda * r.slope_sigma;
    return r;
}

}  // namespace fm
