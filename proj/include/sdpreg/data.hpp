#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdpreg/error_spec.hpp"
#include "sdpreg/rng.hpp"

namespace sdpreg {

// Grouped regression data: per group a response vector of length m_i and an
// m_i x p covariate matrix. Immutable after construction; shared freely
// across chains.
struct PanelDataset {
    struct Group {
        Eigen::VectorXd y;
        Eigen::MatrixXd X;  // m_i x p
    };
    std::vector<Group> groups;
    int p = 0;

    std::size_t num_groups() const { return groups.size(); }
    std::size_t total_observations() const;
    void validate() const;
};

enum class CovariateLaw {
    BernoulliHalf,  // iid Bernoulli(1/2) entries in {0, 1}
    Rademacher,     // iid fair signs in {-1, +1}
    ConstantOne,    // all-ones single column (location model)
    Fixed,          // take covariates from GenerativeConfig::fixed_covariates
};

struct GenerativeConfig {
    Eigen::VectorXd beta0 = (Eigen::VectorXd(2) << -1.0, 1.0).finished();
    ErrorSpec error = ErrorSpec::standard_normal();
    double random_effect_sd = 1.0;  // sd of the shared per-group intercept; 0 disables
    int num_groups = 20;
    int group_size = 5;
    CovariateLaw covariates = CovariateLaw::BernoulliHalf;
    // row-major (num_groups*group_size) x p matrix for CovariateLaw::Fixed
    std::optional<Eigen::MatrixXd> fixed_covariates;

    void validate() const;
};

PanelDataset simulate_dataset(RngStream& rng, const GenerativeConfig& cfg);

// Log likelihood given all latents: sum_ij log phi_sigma(Y_ij - beta'X_ij -
// b_i - z_ij), with z indexed over observations in group-major order and b
// one scalar per group.
double loglik_given_latents(const PanelDataset& data, const Eigen::VectorXd& beta, double sigma,
                            std::span<const double> z, std::span<const double> b);

// ---------------------------------------------------------------------------
// Orthodontic growth data and its five model designs
// ---------------------------------------------------------------------------

struct GrowthRecord {
    std::string subject;
    int sex = 0;  // 0 = boy, 1 = girl
    double age = 0.0;
    double distance = 0.0;
};

// CSV columns subject,sex,age,distance with a header row. Parse failures
// carry the offending line number.
std::vector<GrowthRecord> load_growth_csv(const std::string& path);

enum class SubModel { M1, M2, M3, M4, M5 };

SubModel parse_submodel(const std::string& token);
std::string submodel_name(SubModel m);

// q = number of random-effect columns, sdp = mixture errors vs normal.
struct ModelStructure {
    int num_random_effects = 0;
    bool sdp_errors = false;
};

ModelStructure submodel_structure(SubModel m);

// Sampler-ready design built from growth records: fixed effects
// [1, sex, age, sex*age], random-effect design per group ([] / [1] / [1, age]
// by submodel), plus report parameter names.
struct GrowthDesign {
    PanelDataset data;
    std::vector<Eigen::MatrixXd> re_design;  // per group, m_i x q
    std::vector<std::string> beta_names;
    ModelStructure structure;
};

GrowthDesign build_growth_design(const std::vector<GrowthRecord>& records, SubModel m);

}  // namespace sdpreg
