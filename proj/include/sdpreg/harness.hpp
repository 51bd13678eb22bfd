#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdpreg/bvm.hpp"
#include "sdpreg/data.hpp"
#include "sdpreg/sampler.hpp"

namespace sdpreg {

// One cell of the simulation study: an error law crossed with a set of
// estimators, replicated `reps` times on freshly simulated datasets.
struct ExperimentConfig {
    std::string error_token = "E6";
    int reps = 100;
    int groups = 20;
    int group_size = 5;
    std::vector<std::string> methods = {"F1", "F2", "B1", "B2", "B3"};
    std::uint64_t seed = 1;
    ChainConfig chain;
    PriorConfig priors;
    SamplerOptions sampler;
    Eigen::VectorXd beta0 = (Eigen::VectorXd(2) << -1.0, 1.0).finished();
    double random_effect_sd = 1.0;
    CovariateLaw covariates = CovariateLaw::BernoulliHalf;
    int threads = 0;  // 0 = hardware concurrency
    std::optional<std::string> out_path;          // aggregate CSV
    std::optional<std::string> per_rep_out_path;  // per-rep CSV
    std::optional<std::string> density_grid_path; // error-density grid CSV

    void validate() const;
};

struct RepMethodRecord {
    int rep = 0;
    std::string method;
    bool ok = false;
    double sqerr = 0.0;
    std::string error_category;
};

struct MethodAggregate {
    std::string method;
    int successes = 0;
    int failures = 0;
    double mse = 0.0;
    double rel_eff = 0.0;  // mse / mse(B3); NaN when B3 was not run
};

struct ResultTable {
    std::string experiment;
    std::vector<RepMethodRecord> records;
    std::vector<MethodAggregate> aggregates;

    const MethodAggregate& aggregate(const std::string& method) const;
};

ResultTable cmd_simulate(const ExperimentConfig& cfg);

// Growth-data fit of one submodel; writes parameter,mean,sd,median,q025,q975
// rows shaped like the report table (betas, sigma, then the random-effect
// sds present in the submodel).
PosteriorSummary cmd_fit(SubModel model, const std::string& data_path, const ChainConfig& chain,
                         const PriorConfig& priors, const SamplerOptions& options = {},
                         const std::optional<std::string>& out_path = std::nullopt,
                         const std::optional<std::string>& draw_log_path = std::nullopt);

enum class BvmModelKind { Location, Regression, RandomIntercept };

BvmModelKind parse_bvm_model(const std::string& token);

struct BvmStudyConfig {
    BvmModelKind model = BvmModelKind::Location;
    std::string error_token = "E8";
    int n = 500;          // observations (location/regression) or groups
    int group_size = 5;   // random-intercept only
    double sigma_b = 1.0; // random-intercept truth
    int reps = 20;
    double theta0 = 0.0;  // location truth; regression/RI use beta0
    Eigen::VectorXd beta0 = (Eigen::VectorXd(2) << -1.0, 1.0).finished();
    std::uint64_t seed = 7;
    ChainConfig chain;
    PriorConfig priors;
    SamplerOptions sampler;
    int gh_nodes = 64;
    int v_monte_carlo_reps = 100000;  // for the random-intercept V_eta estimate
    int threads = 0;
    std::optional<std::string> out_path;
};

struct BvmRow {
    int n = 0;
    int rep = 0;
    double mean_gap = 0.0;
    double min_eig = 0.0;
    double max_eig = 0.0;
    double max_ks = 0.0;
};

// Gaussian-limit study: per replication, simulate from the chosen model with
// a known mixture error law, run the mixture sampler, and compare the
// posterior of sqrt(n)(beta - beta0) against N(Delta_n, V_n^{-1}). The
// location and regression kinds use iid observations (n counts them); the
// random-intercept kind uses n groups of group_size with a shared normal
// effect, the group score evaluated by Gauss-Hermite quadrature.
std::vector<BvmRow> cmd_bvm(const BvmStudyConfig& cfg);

struct SdpDemoConfig {
    double concentration = 1.0;
    double base_sd = 3.0;
    int draws = 0;                     // sequential predictive draws to simulate
    std::vector<double> past_draws;    // explicit past observations (overrides `draws`)
    std::uint64_t seed = 1;
    std::optional<std::string> out_path;
};

struct SdpDemoRow {
    std::string kind;  // predictive_base | predictive_atom | stick_atom | stick_remainder
    int index = 0;
    double location = 0.0;
    double weight = 0.0;
};

std::vector<SdpDemoRow> cmd_sdp_demo(const SdpDemoConfig& cfg);

}  // namespace sdpreg
