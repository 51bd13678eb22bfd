#pragma once

#include <string>

#include <Eigen/Dense>

#include "sdpreg/data.hpp"

namespace sdpreg {

struct FitResult {
    Eigen::VectorXd beta;
    double sigma_sq = 0.0;
    double sigma_b_sq = 0.0;  // meaningful for the mixed-model fit only
    int iterations_used = 0;
    bool converged = false;
    std::string message;
};

// Ordinary least squares over the pooled observations; sigma_sq is RSS/(N-p).
// Throws Error("singular_design", ...) naming the deficient rank when X'X is
// singular.
FitResult ols_fit(const PanelDataset& data);

// Gaussian random-intercept log likelihood at (beta, sigma_sq, sigma_b_sq);
// exact via the compound-symmetry determinant and inverse.
double gaussian_mixed_loglik(const PanelDataset& data, const Eigen::VectorXd& beta,
                             double sigma_sq, double sigma_b_sq);

// Maximum likelihood for the normal/normal random-intercept model via EM.
// The E step uses the conjugate posterior moments of each b_i; the M step is
// a GLS-style coefficient update plus closed-form variance updates. The log
// likelihood is checked to be non-decreasing every iteration. Non-convergence
// within max_iter returns converged=false rather than throwing.
FitResult mle_normal_normal(const PanelDataset& data, double tol = 1e-8, int max_iter = 500);

}  // namespace sdpreg
