/*
 * Copyright 2026 The pbftune Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pbftune/error.hpp"

namespace pbftune {

using Point2 = std::array<double, 2>;

/// Squared-exponential kernel with one length scale per input.
struct Kernel {
    double variance = 1.0;
    Point2 length_scales{0.5, 0.5};

    double operator()(const Point2& a, const Point2& b) const {
        const double d0 = (a[0] - b[0]) / length_scales[0];
        const double d1 = (a[1] - b[1]) / length_scales[1];
        return variance * std::exp(-0.5 * (d0 * d0 + d1 * d1));
    }

    void validate() const {
        detail::require(std::isfinite(variance) && variance > 0.0, "gp: kernel variance must be > 0");
        for (double l : length_scales) {
            detail::require(std::isfinite(l) && l > 0.0, "gp: length scales must be > 0");
        }
    }
};

inline double kernel_eval(const Kernel& k, const Point2& a, const Point2& b) { return k(a, b); }

struct Posterior {
    double mean = 0.0;
    double variance = 0.0;
};

/// GP regression with fixed hyperparameters and a constant prior mean.
///
/// The gram matrix `K + noise_var * I` is Cholesky-factorized after every
/// insertion. If the factorization fails, a diagonal jitter starting at
/// 1e-10 * variance is escalated tenfold up to 1e-4 * variance before
/// giving up with NumericalError.
class GpModel {
public:
    GpModel(Kernel kernel = {}, double noise_var = 1e-2, double prior_mean = 0.0)
        : kernel_(kernel), noise_var_(noise_var), prior_mean_(prior_mean) {
        kernel_.validate();
        detail::require(std::isfinite(noise_var_) && noise_var_ >= 0.0, "gp: noise variance must be >= 0");
        detail::require(std::isfinite(prior_mean_), "gp: prior mean must be finite");
    }

    void add(const Point2& x, double g) {
        if (!std::isfinite(g) || !std::isfinite(x[0]) || !std::isfinite(x[1])) {
            throw InputError("gp: observation must be finite");
        }
        points_.push_back(x);
        observations_.push_back(g);
        try {
            refit();
        } catch (...) {
            points_.pop_back();
            observations_.pop_back();
            refit();
            throw;
        }
    }

    Posterior posterior(const Point2& x) const {
        const std::size_t r = points_.size();
        Posterior out{prior_mean_, kernel_(x, x)};
        if (r == 0) {
            return out;
        }
        Eigen::VectorXd k_star(static_cast<Eigen::Index>(r));
        for (std::size_t i = 0; i < r; ++i) {
            k_star(static_cast<Eigen::Index>(i)) = kernel_(x, points_[i]);
        }
        out.mean += k_star.dot(alpha_);
        const Eigen::VectorXd v = factor_.matrixL().solve(k_star);
        out.variance = std::max(0.0, out.variance - v.squaredNorm());
        return out;
    }

    /// Posterior at many points at once; columns of `queries` are points.
    void posterior(const Eigen::Matrix<double, 2, Eigen::Dynamic>& queries, Eigen::VectorXd& mean,
                   Eigen::VectorXd& variance) const {
        const Eigen::Index m = queries.cols();
        const auto r = static_cast<Eigen::Index>(points_.size());
        mean.setConstant(m, prior_mean_);
        variance.setConstant(m, kernel_.variance);
        if (r == 0) {
            return;
        }
        Eigen::MatrixXd k_star(r, m);
        for (Eigen::Index j = 0; j < m; ++j) {
            const Point2 q{queries(0, j), queries(1, j)};
            for (Eigen::Index i = 0; i < r; ++i) {
                k_star(i, j) = kernel_(q, points_[static_cast<std::size_t>(i)]);
            }
        }
        mean.noalias() += k_star.transpose() * alpha_;
        factor_.matrixL().solveInPlace(k_star);
        variance -= k_star.colwise().squaredNorm().transpose();
        variance = variance.cwiseMax(0.0);
    }

    std::size_t size() const { return points_.size(); }
    const std::vector<Point2>& points() const { return points_; }
    const std::vector<double>& observations() const { return observations_; }
    const Kernel& kernel() const { return kernel_; }
    double noise_var() const { return noise_var_; }
    double prior_mean() const { return prior_mean_; }
    double jitter() const { return jitter_; }

private:
    void refit() {
        const auto r = static_cast<Eigen::Index>(points_.size());
        jitter_ = 0.0;
        if (r == 0) {
            alpha_.resize(0);
            return;
        }
        Eigen::MatrixXd gram(r, r);
        for (Eigen::Index i = 0; i < r; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double k = kernel_(points_[static_cast<std::size_t>(i)], points_[static_cast<std::size_t>(j)]);
                gram(i, j) = k;
                gram(j, i) = k;
            }
            gram(i, i) += noise_var_;
        }
        double jitter = 0.0;
        const double max_jitter = 1e-4 * kernel_.variance;
        for (;;) {
            factor_.compute(gram + jitter * Eigen::MatrixXd::Identity(r, r));
            if (factor_.info() == Eigen::Success && pivots_positive()) {
                break;
            }
            jitter = jitter == 0.0 ? 1e-10 * kernel_.variance : jitter * 10.0;
            if (jitter > max_jitter * (1.0 + 1e-9)) {
                throw NumericalError("gp: gram matrix not positive definite after jitter escalation");
            }
        }
        jitter_ = jitter;
        Eigen::VectorXd residual(r);
        for (Eigen::Index i = 0; i < r; ++i) {
            residual(i) = observations_[static_cast<std::size_t>(i)] - prior_mean_;
        }
        alpha_ = factor_.solve(residual);
    }

    bool pivots_positive() const {
        const auto diag = factor_.matrixLLT().diagonal();
        return (diag.array() > 0.0).all() && diag.allFinite();
    }

    Kernel kernel_;
    double noise_var_;
    double prior_mean_;
    std::vector<Point2> points_;
    std::vector<double> observations_;
    Eigen::LLT<Eigen::MatrixXd> factor_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
};

}  // namespace pbftune
