#include "sdpreg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sdpreg/errors.hpp"

namespace sdpreg {

void PriorConfig::validate() const {
    require(tau0_sq > 0.0 && alpha0 > 0.0 && lambda0 > 0.0 && alpha1 > 0.0 && lambda1 > 0.0,
            "parameter", "PriorConfig: all hyperparameters must be > 0");
    sdp.validate();
}

void ChainConfig::validate() const {
    require(iterations >= 1, "parameter", "ChainConfig: iterations must be >= 1");
    require(burn_in >= 0 && burn_in < iterations, "parameter",
            "ChainConfig: burn_in must be in [0, iterations)");
    require(thin >= 1, "parameter", "ChainConfig: thin must be >= 1");
}

int ChainConfig::retained() const {
    return (iterations - burn_in + thin - 1) / thin;
}

Variant parse_variant(const std::string& token) {
    if (token == "B1") return Variant::B1;
    if (token == "B2") return Variant::B2;
    if (token == "B3") return Variant::B3;
    fail("parse", "unknown variant '" + token + "' (expected B1, B2 or B3)");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::B1: return "B1";
        case Variant::B2: return "B2";
        case Variant::B3: return "B3";
    }
    fail("internal", "variant_name: unreachable");
}

ModelStructure variant_structure(Variant v) {
    switch (v) {
        case Variant::B1: return {0, false};
        case Variant::B2: return {1, false};
        case Variant::B3: return {1, true};
    }
    fail("internal", "variant_structure: unreachable");
}

// ---------------------------------------------------------------------------
// Conditional updates
// ---------------------------------------------------------------------------

Eigen::VectorXd update_beta(RngStream& rng, const PanelDataset& data,
                            std::span<const double> offset, double sigma_sq, double tau0_sq) {
    require(sigma_sq > 0.0 && tau0_sq > 0.0, "parameter", "update_beta: variances must be > 0");
    require(offset.size() == data.total_observations(), "dimension",
            "update_beta: offset length mismatch");
    const int p = data.p;
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xr = Eigen::VectorXd::Zero(p);
    std::size_t idx = 0;
    for (const PanelDataset::Group& g : data.groups) {
        xtx.noalias() += g.X.transpose() * g.X;
        for (Eigen::Index j = 0; j < g.y.size(); ++j, ++idx) {
            xr.noalias() += (g.y(j) - offset[idx]) * g.X.row(j).transpose();
        }
    }
    const Eigen::MatrixXd a = sigma_sq * Eigen::MatrixXd::Identity(p, p) + tau0_sq * xtx;
    const Eigen::LLT<Eigen::MatrixXd> llt_a(a);
    require(llt_a.info() == Eigen::Success, "internal", "update_beta: precision not PD");
    const Eigen::VectorXd mean = tau0_sq * llt_a.solve(xr);
    const Eigen::MatrixXd cov = tau0_sq * sigma_sq * llt_a.solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::LLT<Eigen::MatrixXd> llt_cov(cov);
    require(llt_cov.info() == Eigen::Success, "internal", "update_beta: covariance not PD");
    Eigen::VectorXd z(p);
    for (int k = 0; k < p; ++k) z(k) = rng.standard_normal();
    return mean + llt_cov.matrixL() * z;
}

double update_sigma2(RngStream& rng, std::span<const double> residuals, double alpha0,
                     double lambda0) {
    require(alpha0 > 0.0 && lambda0 > 0.0, "parameter", "update_sigma2: hyperparameters must be > 0");
    double ss = 0.0;
    for (double r : residuals) ss += r * r;
    return rng.inverse_gamma(alpha0 + 0.5 * static_cast<double>(residuals.size()),
                             lambda0 + 0.5 * ss);
}

Eigen::VectorXd update_random_effects_group(RngStream& rng, const Eigen::MatrixXd& Z,
                                            const Eigen::VectorXd& group_residual, double sigma_sq,
                                            const Eigen::VectorXd& sigma_b_sq) {
    const int q = static_cast<int>(Z.cols());
    require(q >= 1, "parameter", "update_random_effects_group: empty random-effect design");
    require(Z.rows() == group_residual.size(), "dimension",
            "update_random_effects_group: design/residual mismatch");
    require(sigma_b_sq.size() == q, "dimension",
            "update_random_effects_group: one variance per column required");
    Eigen::MatrixXd prec = Z.transpose() * Z / sigma_sq;
    for (int k = 0; k < q; ++k) {
        require(sigma_b_sq(k) > 0.0, "parameter", "update_random_effects_group: variance <= 0");
        prec(k, k) += 1.0 / sigma_b_sq(k);
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(prec);
    require(llt.info() == Eigen::Success, "internal", "update_random_effects_group: precision not PD");
    const Eigen::VectorXd mean = llt.solve(Z.transpose() * group_residual / sigma_sq);
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(q, q));
    const Eigen::LLT<Eigen::MatrixXd> llt_cov(cov);
    require(llt_cov.info() == Eigen::Success, "internal",
            "update_random_effects_group: covariance not PD");
    Eigen::VectorXd z(q);
    for (int k = 0; k < q; ++k) z(k) = rng.standard_normal();
    return mean + llt_cov.matrixL() * z;
}

double update_sigma_b2(RngStream& rng, std::span<const double> effects, double alpha1,
                       double lambda1) {
    require(alpha1 > 0.0 && lambda1 > 0.0, "parameter",
            "update_sigma_b2: hyperparameters must be > 0");
    require(!effects.empty(), "parameter", "update_sigma_b2: no groups");
    double ss = 0.0;
    for (double b : effects) ss += b * b;
    return rng.inverse_gamma(alpha1 + 0.5 * static_cast<double>(effects.size()),
                             lambda1 + 0.5 * ss);
}

// ---------------------------------------------------------------------------
// GibbsSampler
// ---------------------------------------------------------------------------

GibbsSampler::GibbsSampler(const PanelDataset& data, std::vector<Eigen::MatrixXd> re_design,
                           PriorConfig priors, ModelStructure structure, SamplerOptions options)
    : data_(data),
      re_design_(std::move(re_design)),
      priors_(priors),
      structure_(structure),
      options_(options) {
    data_.validate();
    priors_.validate();
    const int q = structure_.num_random_effects;
    require(q >= 0 && q <= 2, "config", "GibbsSampler: supports 0, 1 or 2 random-effect columns");
    if (q == 0) {
        require(re_design_.empty(), "config",
                "GibbsSampler: random-effect design given but structure has none");
    } else {
        require(re_design_.size() == data_.num_groups(), "config",
                "GibbsSampler: one random-effect design per group required");
        for (std::size_t i = 0; i < re_design_.size(); ++i) {
            require(re_design_[i].rows() == data_.groups[i].y.size() && re_design_[i].cols() == q,
                    "dimension", "GibbsSampler: random-effect design shape mismatch");
        }
    }
    obs_count_ = data_.total_observations();
    xtx_ = Eigen::MatrixXd::Zero(data_.p, data_.p);
    for (const PanelDataset::Group& g : data_.groups) xtx_.noalias() += g.X.transpose() * g.X;
    init_deterministic();
}

void GibbsSampler::init_deterministic() {
    const int q = structure_.num_random_effects;
    state_.beta = Eigen::VectorXd::Zero(data_.p);
    state_.sigma_sq = 1.0;
    state_.b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data_.num_groups()), q);
    state_.sigma_b_sq = Eigen::VectorXd::Ones(q);
    state_.assign = structure_.sdp_errors ? ClassAssignment::single_class(obs_count_)
                                          : ClassAssignment();
    refresh_latents();
}

void GibbsSampler::init_from_prior(RngStream& rng) {
    const int q = structure_.num_random_effects;
    state_.beta.resize(data_.p);
    for (int k = 0; k < data_.p; ++k) state_.beta(k) = rng.normal(0.0, priors_.tau0_sq);
    state_.sigma_sq = rng.inverse_gamma(priors_.alpha0, priors_.lambda0);
    state_.sigma_b_sq.resize(q);
    state_.b.resize(static_cast<Eigen::Index>(data_.num_groups()), q);
    for (int k = 0; k < q; ++k) {
        state_.sigma_b_sq(k) = rng.inverse_gamma(priors_.alpha1, priors_.lambda1);
        for (Eigen::Index i = 0; i < state_.b.rows(); ++i) {
            state_.b(i, k) = rng.normal(0.0, state_.sigma_b_sq(k));
        }
    }
    state_.assign = structure_.sdp_errors && !options_.freeze_latents_at_zero
                        ? ClassAssignment::prior_draw(rng, obs_count_, priors_.sdp)
                        : (structure_.sdp_errors ? ClassAssignment::single_class(obs_count_)
                                                 : ClassAssignment());
    refresh_latents();
}

void GibbsSampler::refresh_latents() {
    if (structure_.sdp_errors && !options_.freeze_latents_at_zero) {
        z_ = state_.assign.latents();
    } else {
        z_.assign(obs_count_, 0.0);
    }
}

double GibbsSampler::observation_offset(std::size_t group, Eigen::Index row,
                                        std::size_t flat) const {
    double offset = z_[flat];
    if (structure_.num_random_effects > 0) {
        offset += re_design_[group].row(row).dot(state_.b.row(static_cast<Eigen::Index>(group)));
    }
    return offset;
}

void GibbsSampler::sweep(RngStream& rng) {
    const int q = structure_.num_random_effects;
    std::vector<double> offset(obs_count_);
    std::vector<double> residuals(obs_count_);

    // (i) beta | sigma, z, b
    {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < data_.groups.size(); ++i) {
            for (Eigen::Index j = 0; j < data_.groups[i].y.size(); ++j, ++idx) {
                offset[idx] = observation_offset(i, j, idx);
            }
        }
        state_.beta = update_beta(rng, data_, offset, state_.sigma_sq, priors_.tau0_sq);
    }

    // (ii) sigma^2 | beta, z, b
    {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < data_.groups.size(); ++i) {
            const PanelDataset::Group& g = data_.groups[i];
            for (Eigen::Index j = 0; j < g.y.size(); ++j, ++idx) {
                residuals[idx] = g.y(j) - g.X.row(j).dot(state_.beta) - offset[idx];
            }
        }
        state_.sigma_sq = update_sigma2(rng, residuals, priors_.alpha0, priors_.lambda0);
    }

    // (iii) b_i | beta, sigma, sigma_b, z   and   (iv) sigma_b^2 | b
    if (q > 0) {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < data_.groups.size(); ++i) {
            const PanelDataset::Group& g = data_.groups[i];
            Eigen::VectorXd r(g.y.size());
            for (Eigen::Index j = 0; j < g.y.size(); ++j, ++idx) {
                r(j) = g.y(j) - g.X.row(j).dot(state_.beta) - z_[idx];
            }
            state_.b.row(static_cast<Eigen::Index>(i)) =
                update_random_effects_group(rng, re_design_[i], r, state_.sigma_sq,
                                            state_.sigma_b_sq)
                    .transpose();
        }
        for (int k = 0; k < q; ++k) {
            std::vector<double> col(data_.num_groups());
            for (std::size_t i = 0; i < col.size(); ++i) {
                col[i] = state_.b(static_cast<Eigen::Index>(i), k);
            }
            state_.sigma_b_sq(k) = update_sigma_b2(rng, col, priors_.alpha1, priors_.lambda1);
        }
    }

    // (v) latent classes | beta, b, sigma
    if (structure_.sdp_errors && !options_.freeze_latents_at_zero) {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < data_.groups.size(); ++i) {
            const PanelDataset::Group& g = data_.groups[i];
            for (Eigen::Index j = 0; j < g.y.size(); ++j, ++idx) {
                double e = g.y(j) - g.X.row(j).dot(state_.beta);
                if (q > 0) {
                    e -= re_design_[i].row(j).dot(state_.b.row(static_cast<Eigen::Index>(i)));
                }
                residuals[idx] = e;
            }
        }
        gibbs_class_sweep(rng, state_.assign, residuals, std::sqrt(state_.sigma_sq), priors_.sdp,
                          options_.class_sweep);
        refresh_latents();
    }
}

void GibbsSampler::simulate_responses(RngStream& rng) {
    const double sd = std::sqrt(state_.sigma_sq);
    std::size_t idx = 0;
    for (std::size_t i = 0; i < data_.groups.size(); ++i) {
        PanelDataset::Group& g = data_.groups[i];
        for (Eigen::Index j = 0; j < g.y.size(); ++j, ++idx) {
            const double mean = g.X.row(j).dot(state_.beta) + observation_offset(i, j, idx);
            g.y(j) = mean + sd * rng.standard_normal();
        }
    }
}

std::vector<double> GibbsSampler::latents() const { return z_; }

std::vector<double> GibbsSampler::responses_flat() const {
    std::vector<double> y;
    y.reserve(obs_count_);
    for (const PanelDataset::Group& g : data_.groups) {
        for (Eigen::Index j = 0; j < g.y.size(); ++j) y.push_back(g.y(j));
    }
    return y;
}

std::vector<double> GibbsSampler::current_residuals() const {
    std::vector<double> e;
    e.reserve(obs_count_);
    const int q = structure_.num_random_effects;
    for (std::size_t i = 0; i < data_.groups.size(); ++i) {
        const PanelDataset::Group& g = data_.groups[i];
        for (Eigen::Index j = 0; j < g.y.size(); ++j) {
            double r = g.y(j) - g.X.row(j).dot(state_.beta);
            if (q > 0) {
                r -= re_design_[i].row(j).dot(state_.b.row(static_cast<Eigen::Index>(i)));
            }
            e.push_back(r);
        }
    }
    return e;
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted[0];
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return (1.0 - frac) * sorted[lo] + frac * sorted[hi];
}

}  // namespace

PosteriorSummary summarize_draws(std::vector<std::string> names, Eigen::MatrixXd draws, int p) {
    require(static_cast<Eigen::Index>(names.size()) == draws.cols(), "dimension",
            "summarize_draws: one name per column required");
    PosteriorSummary summary;
    summary.names = std::move(names);
    summary.draws = std::move(draws);
    summary.p = p;
    const Eigen::Index n = summary.draws.rows();
    summary.params.reserve(summary.names.size());
    std::vector<double> buf;
    for (std::size_t c = 0; c < summary.names.size(); ++c) {
        ParameterSummary ps;
        ps.name = summary.names[c];
        const auto col = summary.draws.col(static_cast<Eigen::Index>(c));
        ps.mean = col.mean();
        ps.sd = n > 1 ? std::sqrt((col.array() - ps.mean).square().sum() / (n - 1)) : 0.0;
        buf.assign(col.data(), col.data() + n);
        std::sort(buf.begin(), buf.end());
        ps.median = quantile_sorted(buf, 0.5);
        ps.q025 = quantile_sorted(buf, 0.025);
        ps.q975 = quantile_sorted(buf, 0.975);
        summary.params.push_back(std::move(ps));
    }
    return summary;
}

Eigen::VectorXd PosteriorSummary::beta_mean() const {
    Eigen::VectorXd m(p);
    for (int k = 0; k < p; ++k) m(k) = params[static_cast<std::size_t>(k)].mean;
    return m;
}

const ParameterSummary& PosteriorSummary::param(const std::string& name) const {
    for (const ParameterSummary& ps : params) {
        if (ps.name == name) return ps;
    }
    fail("parameter", "PosteriorSummary: no parameter named '" + name + "'");
}

bool PosteriorSummary::has_param(const std::string& name) const {
    for (const ParameterSummary& ps : params) {
        if (ps.name == name) return true;
    }
    return false;
}

PosteriorSummary run_chain(const PanelDataset& data, std::vector<Eigen::MatrixXd> re_design,
                           const PriorConfig& priors, const ChainConfig& chain,
                           ModelStructure structure, SamplerOptions options,
                           const std::vector<std::string>& beta_names,
                           const std::optional<std::string>& draw_log_path) {
    chain.validate();
    GibbsSampler sampler(data, std::move(re_design), priors, structure, options);
    RngStream rng(chain.seed, chain.stream_id);

    const int p = data.p;
    const int q = structure.num_random_effects;
    std::vector<std::string> names;
    if (!beta_names.empty()) {
        require(static_cast<int>(beta_names.size()) == p, "config",
                "run_chain: beta_names size mismatch");
        names = beta_names;
    } else {
        for (int k = 0; k < p; ++k) names.push_back("beta_" + std::to_string(k + 1));
    }
    names.push_back("sigma2");
    names.push_back("sigma");
    for (int k = 0; k < q; ++k) {
        if (q == 1) {
            names.push_back("sigma_b2");  // the random-intercept variance
            names.push_back("sigma_b");
        } else {
            const std::string suffix = std::to_string(k + 1);
            names.push_back("sigma_b" + suffix + "_sq");
            names.push_back("sigma_b" + suffix);
        }
    }
    if (structure.sdp_errors) names.push_back("n_classes");

    const int retained = chain.retained();
    Eigen::MatrixXd draws(retained, static_cast<Eigen::Index>(names.size()));

    std::ofstream log;
    if (draw_log_path) {
        log.open(*draw_log_path);
        require(static_cast<bool>(log), "io", "run_chain: cannot open draw log '" + *draw_log_path + "'");
        log << "iter";
        for (const std::string& n : names) log << "," << n;
        log << "\n";
        log.precision(10);
    }

    int row = 0;
    for (int iter = 0; iter < chain.iterations; ++iter) {
        sampler.sweep(rng);
        if (iter < chain.burn_in || (iter - chain.burn_in) % chain.thin != 0) continue;
        const ChainState& s = sampler.state();
        Eigen::Index c = 0;
        for (int k = 0; k < p; ++k) draws(row, c++) = s.beta(k);
        draws(row, c++) = s.sigma_sq;
        draws(row, c++) = std::sqrt(s.sigma_sq);
        for (int k = 0; k < q; ++k) {
            draws(row, c++) = s.sigma_b_sq(k);
            draws(row, c++) = std::sqrt(s.sigma_b_sq(k));
        }
        if (structure.sdp_errors) {
            draws(row, c++) = static_cast<double>(s.assign.num_classes());
        }
        if (log.is_open()) {
            log << iter;
            for (Eigen::Index k = 0; k < draws.cols(); ++k) log << "," << draws(row, k);
            log << "\n";
        }
        ++row;
    }
    require(row == retained, "internal", "run_chain: retained draw count mismatch");
    return summarize_draws(std::move(names), std::move(draws), p);
}

PosteriorSummary run_chain(const PanelDataset& data, const PriorConfig& priors,
                           const ChainConfig& chain, Variant variant, SamplerOptions options) {
    const ModelStructure structure = variant_structure(variant);
    std::vector<Eigen::MatrixXd> re_design;
    if (structure.num_random_effects == 1) {
        re_design.reserve(data.num_groups());
        for (const PanelDataset::Group& g : data.groups) {
            re_design.push_back(Eigen::MatrixXd::Ones(g.y.size(), 1));
        }
    }
    return run_chain(data, std::move(re_design), priors, chain, structure, options);
}

}  // namespace sdpreg
