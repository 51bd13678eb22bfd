#include "sdpreg/bvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sdpreg/errors.hpp"
#include "sdpreg/quadrature.hpp"
#include "sdpreg/rng.hpp"

namespace sdpreg {

TrueErrorModel TrueErrorModel::from_error_spec(const ErrorSpec& spec) {
    if (spec.kind == ErrorKind::StandardNormal) return standard_normal();
    require(spec.kind == ErrorKind::SymMixture, "parameter",
            "TrueErrorModel: the generating law must be a normal mixture (or standard normal)");
    TrueErrorModel m;
    m.centers = spec.centers;
    m.weights = spec.weights;
    m.component_sd = spec.component_sd;
    m.validate();
    return m;
}

TrueErrorModel TrueErrorModel::standard_normal() {
    TrueErrorModel m;
    m.centers = {0.0};
    m.weights = {0.5};
    m.component_sd = 1.0;
    return m;
}

void TrueErrorModel::validate() const {
    require(!centers.empty() && centers.size() == weights.size(), "parameter",
            "TrueErrorModel: centers/weights mismatch");
    require(component_sd > 0.0, "parameter", "TrueErrorModel: component sd must be > 0");
    double total = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
        require(centers[k] >= 0.0, "parameter", "TrueErrorModel: centers must be >= 0");
        total += weights[k];
    }
    require(std::fabs(2.0 * total - 1.0) <= 1e-9, "parameter",
            "TrueErrorModel: weights must sum to 1/2");
}

double TrueErrorModel::density(double x) const {
    double p = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
        p += weights[k] *
             (normal_pdf(x - centers[k], component_sd) + normal_pdf(x + centers[k], component_sd));
    }
    return p;
}

double TrueErrorModel::density_deriv(double x) const {
    // phi_sd'(u) = -(u / sd^2) phi_sd(u)
    const double inv_var = 1.0 / (component_sd * component_sd);
    double d = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
        const double um = x - centers[k];
        const double up = x + centers[k];
        d += weights[k] * (-um * inv_var * normal_pdf(um, component_sd) -
                           up * inv_var * normal_pdf(up, component_sd));
    }
    return d;
}

double TrueErrorModel::score(double x) const {
    const double p = density(x);
    require(p > 0.0, "parameter", "TrueErrorModel: density vanished (|x| too large?)");
    return -density_deriv(x) / p;
}

double TrueErrorModel::halfwidth() const {
    double zmax = 0.0;
    for (double z : centers) zmax = std::max(zmax, z);
    return zmax + 12.0 * component_sd;
}

double fisher_info(const TrueErrorModel& model, double rel_tol) {
    model.validate();
    const double h = model.halfwidth();
    return integrate_or_throw(
        [&model](double x) {
            const double s = model.score(x);
            return s * s * model.density(x);
        },
        -h, h, rel_tol, 1e-14, 4000);
}

double cross_info(const TrueErrorModel& eta, const TrueErrorModel& eta0, double rel_tol) {
    eta.validate();
    eta0.validate();
    const double h = std::max(eta.halfwidth(), eta0.halfwidth());
    return integrate_or_throw(
        [&](double x) {
            return eta.log_density_deriv(x) * eta0.log_density_deriv(x) * eta0.density(x);
        },
        -h, h, rel_tol, 1e-14, 4000);
}

CenteringResult centering_delta(const TrueErrorModel& model, const PanelDataset& data,
                                const Eigen::VectorXd& beta0) {
    data.validate();
    require(beta0.size() == data.p, "dimension", "centering_delta: beta0 dimension mismatch");
    const int p = data.p;
    const auto n = static_cast<double>(data.total_observations());

    Eigen::MatrixXd xn = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd score_sum = Eigen::VectorXd::Zero(p);
    for (const PanelDataset::Group& g : data.groups) {
        xn.noalias() += g.X.transpose() * g.X;
        for (Eigen::Index j = 0; j < g.y.size(); ++j) {
            const double e = g.y(j) - g.X.row(j).dot(beta0);
            score_sum.noalias() += model.score(e) * g.X.row(j).transpose();
        }
    }
    xn /= n;

    CenteringResult r;
    r.design = xn;
    r.v_n = fisher_info(model) * xn;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(r.v_n);
    require(lu.isInvertible(), "singular_design", "centering_delta: V_n is singular");
    r.delta_n = lu.solve(score_sum) / std::sqrt(n);
    return r;
}

Eigen::VectorXd group_log_density_gradient(const TrueErrorModel& model, double sigma_b,
                                           const Eigen::VectorXd& residuals, int gh_nodes) {
    require(sigma_b > 0.0, "parameter", "group_log_density_gradient: sigma_b must be > 0");
    static thread_local int cached_order = -1;
    static thread_local std::vector<double> nodes, weights;
    if (cached_order != gh_nodes) {
        const GaussHermite gh(gh_nodes);
        nodes = gh.nodes;
        weights = gh.weights;
        cached_order = gh_nodes;
    }
    const auto m = residuals.size();
    const std::size_t k = nodes.size();
    // log-domain mixture over the random effect: b = sqrt(2) sigma_b t
    std::vector<double> log_terms(k);
    double max_lt = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < k; ++a) {
        const double b = std::numbers::sqrt2 * sigma_b * nodes[a];
        double lt = std::log(weights[a]);
        for (Eigen::Index j = 0; j < m; ++j) {
            lt += std::log(model.density(residuals(j) - b));
        }
        log_terms[a] = lt;
        max_lt = std::max(max_lt, lt);
    }
    double denom = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(m);
    for (std::size_t a = 0; a < k; ++a) {
        const double b = std::numbers::sqrt2 * sigma_b * nodes[a];
        const double w = std::exp(log_terms[a] - max_lt);
        denom += w;
        for (Eigen::Index j = 0; j < m; ++j) {
            grad(j) += w * model.log_density_deriv(residuals(j) - b);
        }
    }
    require(denom > 0.0, "internal", "group_log_density_gradient: underflow");
    return grad / denom;
}

Eigen::MatrixXd group_score_covariance(const TrueErrorModel& model, double sigma_b, int group_size,
                                       int gh_nodes, int monte_carlo_reps, std::uint64_t mc_seed) {
    require(group_size >= 1 && monte_carlo_reps >= 1, "parameter",
            "group_score_covariance: bad sizes");
    RngStream rng(mc_seed, 0);
    Eigen::MatrixXd v_eta = Eigen::MatrixXd::Zero(group_size, group_size);
    Eigen::VectorXd e(group_size);
    const ErrorSpec noise = ErrorSpec::sym_mixture(model.centers, model.weights, model.component_sd);
    for (int rep = 0; rep < monte_carlo_reps; ++rep) {
        const double b = rng.normal(0.0, sigma_b * sigma_b);
        for (int j = 0; j < group_size; ++j) e(j) = b + noise.sample(rng);
        const Eigen::VectorXd grad = group_log_density_gradient(model, sigma_b, e, gh_nodes);
        v_eta.noalias() += grad * grad.transpose();
    }
    return v_eta / static_cast<double>(monte_carlo_reps);
}

CenteringResult centering_delta_random_intercept(const TrueErrorModel& model, double sigma_b,
                                                 const PanelDataset& data,
                                                 const Eigen::VectorXd& beta0, int gh_nodes,
                                                 int v_monte_carlo_reps, std::uint64_t mc_seed) {
    require(!data.groups.empty(), "parameter", "centering_delta_random_intercept: no groups");
    const Eigen::MatrixXd v_eta =
        group_score_covariance(model, sigma_b, static_cast<int>(data.groups.front().y.size()),
                               gh_nodes, v_monte_carlo_reps, mc_seed);
    return centering_delta_random_intercept(model, sigma_b, data, beta0, v_eta, gh_nodes);
}

CenteringResult centering_delta_random_intercept(const TrueErrorModel& model, double sigma_b,
                                                 const PanelDataset& data,
                                                 const Eigen::VectorXd& beta0,
                                                 const Eigen::MatrixXd& v_eta, int gh_nodes) {
    data.validate();
    require(beta0.size() == data.p, "dimension",
            "centering_delta_random_intercept: beta0 dimension mismatch");
    const int p = data.p;
    const auto n = static_cast<double>(data.num_groups());
    const auto m = data.groups.front().y.size();
    for (const PanelDataset::Group& g : data.groups) {
        require(g.y.size() == m, "parameter",
                "centering_delta_random_intercept: balanced groups required for the V_eta estimate");
    }
    require(v_eta.rows() == m && v_eta.cols() == m, "dimension",
            "centering_delta_random_intercept: V_eta must be group-size square");

    Eigen::MatrixXd v_n = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd score_sum = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(p, p);
    for (const PanelDataset::Group& g : data.groups) {
        v_n.noalias() += g.X.transpose() * v_eta * g.X;
        design.noalias() += g.X.transpose() * g.X;
        const Eigen::VectorXd resid = g.y - g.X * beta0;
        const Eigen::VectorXd grad = group_log_density_gradient(model, sigma_b, resid, gh_nodes);
        score_sum.noalias() -= g.X.transpose() * grad;  // score = -X' grad l
    }
    v_n /= n;
    design /= n;

    CenteringResult r;
    r.design = design;
    r.v_n = v_n;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(v_n);
    require(lu.isInvertible(), "singular_design",
            "centering_delta_random_intercept: V_n is singular");
    r.delta_n = lu.solve(score_sum) / std::sqrt(n);
    return r;
}

double ks_distance_standard_normal(std::vector<double> values) {
    require(!values.empty(), "parameter", "ks_distance: empty sample");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double cdf = 0.5 * std::erfc(-values[i] / std::numbers::sqrt2);
        const double hi = (static_cast<double>(i) + 1.0) / n - cdf;
        const double lo = cdf - static_cast<double>(i) / n;
        d = std::max({d, hi, lo});
    }
    return d;
}

double BvMReport::max_ks() const {
    double m = 0.0;
    for (double d : ks_distances) m = std::max(m, d);
    return m;
}

BvMReport gaussianity_report(const Eigen::MatrixXd& beta_draws, const Eigen::VectorXd& beta0,
                             const CenteringResult& centering, std::size_t n_observations) {
    const Eigen::Index n_draws = beta_draws.rows();
    const Eigen::Index p = beta_draws.cols();
    require(n_draws >= 500, "parameter", "gaussianity_report: need at least 500 retained draws");
    require(beta0.size() == p && centering.v_n.rows() == p, "dimension",
            "gaussianity_report: dimension mismatch");

    const double sqrt_n = std::sqrt(static_cast<double>(n_observations));
    Eigen::MatrixXd h = sqrt_n * (beta_draws.rowwise() - beta0.transpose());

    const Eigen::VectorXd h_mean = h.colwise().mean();
    Eigen::MatrixXd centered = h.rowwise() - h_mean.transpose();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n_draws - 1);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> cov_eig(cov);
    require(cov_eig.eigenvalues().minCoeff() >
                1e-12 * std::max(1.0, cov_eig.eigenvalues().maxCoeff()),
            "singular_design", "gaussianity_report: rank-deficient draw covariance");

    BvMReport report;
    report.delta_n = centering.delta_n;
    report.v_n = centering.v_n;
    report.design = centering.design;

    const Eigen::VectorXd gap = h_mean - centering.delta_n;
    report.mean_gap = std::sqrt(gap.dot(centering.v_n * gap));

    const Eigen::LLT<Eigen::MatrixXd> llt(centering.v_n);
    require(llt.info() == Eigen::Success, "parameter", "gaussianity_report: V_n not PD");
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::MatrixXd ratio = l.transpose() * cov * l;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ratio_eig(ratio);
    report.cov_eigenvalues = ratio_eig.eigenvalues();

    // standardized projections along the V_n eigenbasis
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> v_eig(centering.v_n);
    for (Eigen::Index k = 0; k < p; ++k) {
        const Eigen::VectorXd u = v_eig.eigenvectors().col(k);
        const double lambda = v_eig.eigenvalues()(k);
        std::vector<double> z(static_cast<std::size_t>(n_draws));
        const double center = u.dot(centering.delta_n);
        for (Eigen::Index r = 0; r < n_draws; ++r) {
            z[static_cast<std::size_t>(r)] = (h.row(r).dot(u) - center) * std::sqrt(lambda);
        }
        report.ks_distances.push_back(ks_distance_standard_normal(std::move(z)));
    }
    return report;
}

}  // namespace sdpreg
