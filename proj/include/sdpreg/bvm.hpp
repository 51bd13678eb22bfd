#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sdpreg/data.hpp"
#include "sdpreg/error_spec.hpp"

namespace sdpreg {

// The generating error law written as a known mixing measure: mirrored atoms
// (z_k, pi_k) with a common component sd. Accepts SymMixture and
// StandardNormal specs (the latter is the single atom z = 0).
struct TrueErrorModel {
    std::vector<double> centers;  // z_k >= 0
    std::vector<double> weights;  // pi_k, sum = 1/2
    double component_sd = 1.0;

    static TrueErrorModel from_error_spec(const ErrorSpec& spec);
    static TrueErrorModel standard_normal();

    double density(double x) const;
    double density_deriv(double x) const;
    // Location score -p'(x)/p(x); odd in x, equals x for the standard normal.
    double score(double x) const;
    // log-density derivative l'(x) = p'(x)/p(x) = -score(x)
    double log_density_deriv(double x) const { return -score(x); }
    // integration support half-width: max z_k + 12 sd
    double halfwidth() const;
    void validate() const;
};

// Fisher information for location: int score(x)^2 p(x) dx by adaptive
// quadrature; throws Error("quadrature", ...) if the tolerance is unmet.
double fisher_info(const TrueErrorModel& model, double rel_tol = 1e-8);

// Cross information V_eta = int l'_eta(x) l'_eta0(x) p_eta0(x) dx.
double cross_info(const TrueErrorModel& eta, const TrueErrorModel& eta0, double rel_tol = 1e-8);

struct CenteringResult {
    Eigen::VectorXd delta_n;  // p
    Eigen::MatrixXd v_n;      // p x p, information-scaled design
    Eigen::MatrixXd design;   // X_n = n^-1 sum X X'
};

// Efficient-score centering for iid/regression data (groups enter as
// independent rows): Delta_n = n^{-1/2} sum V_n^{-1} score(e_i) X_i with
// V_n = I_eta0 * X_n. n counts observations.
CenteringResult centering_delta(const TrueErrorModel& model, const PanelDataset& data,
                                const Eigen::VectorXd& beta0);

// The m x m second moment of the group log-density gradient under the truth,
// estimated by Monte Carlo over simulated groups (there is no closed form).
Eigen::MatrixXd group_score_covariance(const TrueErrorModel& model, double sigma_b, int group_size,
                                       int gh_nodes = 64, int monte_carlo_reps = 100000,
                                       std::uint64_t mc_seed = 977);

// Random-intercept version: the per-group score is -X_i' grad log p_eta(e_i)
// where the group density integrates the shared N(0, sigma_b^2) effect out by
// Gauss-Hermite quadrature; V_eta (m x m) is estimated by Monte Carlo over
// simulated groups and n counts groups.
CenteringResult centering_delta_random_intercept(const TrueErrorModel& model, double sigma_b,
                                                 const PanelDataset& data,
                                                 const Eigen::VectorXd& beta0, int gh_nodes = 64,
                                                 int v_monte_carlo_reps = 100000,
                                                 std::uint64_t mc_seed = 977);

// Same, reusing a precomputed V_eta (balanced designs share it across
// replications).
CenteringResult centering_delta_random_intercept(const TrueErrorModel& model, double sigma_b,
                                                 const PanelDataset& data,
                                                 const Eigen::VectorXd& beta0,
                                                 const Eigen::MatrixXd& v_eta, int gh_nodes = 64);

// Gradient of the group log density at residual vector e (exposed for
// finite-difference checks).
Eigen::VectorXd group_log_density_gradient(const TrueErrorModel& model, double sigma_b,
                                           const Eigen::VectorXd& residuals, int gh_nodes = 64);

struct BvMReport {
    Eigen::VectorXd delta_n;
    Eigen::MatrixXd v_n;
    Eigen::MatrixXd design;
    double mean_gap = 0.0;                 // |mean(h) - Delta_n| in the V_n metric
    Eigen::VectorXd cov_eigenvalues;       // of V^{1/2} Cov(h) V^{1/2}', should approach 1
    std::vector<double> ks_distances;      // per V-eigenbasis projection vs N(0,1)
    double max_ks() const;
};

// Compares posterior draws of beta against the asserted Gaussian limit
// N(Delta_n, V_n^{-1}) of h = sqrt(n)(beta - beta0). Requires >= 500 draws
// and a full-rank draw covariance.
BvMReport gaussianity_report(const Eigen::MatrixXd& beta_draws, const Eigen::VectorXd& beta0,
                             const CenteringResult& centering, std::size_t n_observations);

// One-sample Kolmogorov-Smirnov distance against the standard normal.
double ks_distance_standard_normal(std::vector<double> values);

}  // namespace sdpreg
