#include "sdpreg/baselines.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "sdpreg/errors.hpp"

namespace sdpreg {

FitResult ols_fit(const PanelDataset& data) {
    data.validate();
    const int p = data.p;
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
    for (const PanelDataset::Group& g : data.groups) {
        xtx.noalias() += g.X.transpose() * g.X;
        xty.noalias() += g.X.transpose() * g.y;
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
    if (!lu.isInvertible()) {
        std::ostringstream os;
        os << "ols_fit: singular design, rank " << lu.rank() << " < " << p;
        fail("singular_design", os.str());
    }
    FitResult fit;
    fit.beta = lu.solve(xty);
    double rss = 0.0;
    std::size_t n_obs = 0;
    for (const PanelDataset::Group& g : data.groups) {
        rss += (g.y - g.X * fit.beta).squaredNorm();
        n_obs += static_cast<std::size_t>(g.y.size());
    }
    const auto dof = static_cast<double>(n_obs) - p;
    fit.sigma_sq = dof > 0.0 ? rss / dof : 0.0;
    fit.converged = true;
    fit.iterations_used = 0;
    return fit;
}

double gaussian_mixed_loglik(const PanelDataset& data, const Eigen::VectorXd& beta,
                             double sigma_sq, double sigma_b_sq) {
    require(sigma_sq > 0.0 && sigma_b_sq >= 0.0, "parameter",
            "gaussian_mixed_loglik: sigma_sq > 0 and sigma_b_sq >= 0 required");
    double ll = 0.0;
    for (const PanelDataset::Group& g : data.groups) {
        const auto m = static_cast<double>(g.y.size());
        const Eigen::VectorXd r = g.y - g.X * beta;
        const double sum_r = r.sum();
        const double lambda = sigma_sq + m * sigma_b_sq;
        // cov = sigma_sq I + sigma_b_sq J: logdet and quadratic form in closed form
        const double logdet = (m - 1.0) * std::log(sigma_sq) + std::log(lambda);
        const double quad = (r.squaredNorm() - sigma_b_sq / lambda * sum_r * sum_r) / sigma_sq;
        ll += -0.5 * (m * std::log(2.0 * std::numbers::pi) + logdet + quad);
    }
    return ll;
}

FitResult mle_normal_normal(const PanelDataset& data, double tol, int max_iter) {
    data.validate();
    require(tol > 0.0 && max_iter >= 1, "parameter", "mle_normal_normal: bad tolerance settings");

    bool any_repeat = false;
    for (const PanelDataset::Group& g : data.groups) {
        if (g.y.size() > 1) any_repeat = true;
    }
    if (!any_repeat) {
        // every group is a single observation: sigma_sq and sigma_b_sq enter
        // only through their sum, so the variance split is unidentified
        FitResult fit = ols_fit(data);
        fit.converged = false;
        fit.sigma_b_sq = 0.0;
        fit.message = "variance components unidentified: all groups have a single observation";
        return fit;
    }

    const int p = data.p;
    const std::size_t n = data.num_groups();
    const auto n_obs = static_cast<double>(data.total_observations());

    FitResult fit = ols_fit(data);
    double sigma_sq = std::max(fit.sigma_sq, 1e-8);
    double sigma_b_sq = std::max(0.1 * sigma_sq, 1e-8);
    Eigen::VectorXd beta = fit.beta;

    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
    for (const PanelDataset::Group& g : data.groups) xtx.noalias() += g.X.transpose() * g.X;
    const Eigen::LLT<Eigen::MatrixXd> llt(xtx);
    require(llt.info() == Eigen::Success, "singular_design", "mle_normal_normal: singular design");

    double prev_ll = gaussian_mixed_loglik(data, beta, sigma_sq, sigma_b_sq);
    int iter = 0;
    bool converged = false;
    std::vector<double> bhat(n, 0.0), bvar(n, 0.0);
    while (iter < max_iter) {
        ++iter;
        // E step: posterior moments of each random intercept
        for (std::size_t i = 0; i < n; ++i) {
            const PanelDataset::Group& g = data.groups[i];
            const auto m = static_cast<double>(g.y.size());
            const double denom = sigma_sq + m * sigma_b_sq;
            const double sum_r = (g.y - g.X * beta).sum();
            bhat[i] = sigma_b_sq * sum_r / denom;
            bvar[i] = sigma_sq * sigma_b_sq / denom;
        }
        // M step
        Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
        for (std::size_t i = 0; i < n; ++i) {
            const PanelDataset::Group& g = data.groups[i];
            xty.noalias() += g.X.transpose() * (g.y.array() - bhat[i]).matrix();
        }
        const Eigen::VectorXd beta_new = llt.solve(xty);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const PanelDataset::Group& g = data.groups[i];
            const auto m = static_cast<double>(g.y.size());
            ss += ((g.y - g.X * beta_new).array() - bhat[i]).matrix().squaredNorm() + m * bvar[i];
        }
        const double sigma_sq_new = ss / n_obs;
        double sb = 0.0;
        for (std::size_t i = 0; i < n; ++i) sb += bhat[i] * bhat[i] + bvar[i];
        const double sigma_b_sq_new = sb / static_cast<double>(n);

        const double delta = std::max({(beta_new - beta).cwiseAbs().maxCoeff(),
                                       std::fabs(sigma_sq_new - sigma_sq),
                                       std::fabs(sigma_b_sq_new - sigma_b_sq)});
        beta = beta_new;
        sigma_sq = std::max(sigma_sq_new, 1e-12);
        sigma_b_sq = std::max(sigma_b_sq_new, 0.0);

        const double ll = gaussian_mixed_loglik(data, beta, sigma_sq, sigma_b_sq);
        require(ll >= prev_ll - 1e-10 * (1.0 + std::fabs(prev_ll)), "internal",
                "mle_normal_normal: EM log likelihood decreased");
        prev_ll = ll;

        if (delta < tol) {
            converged = true;
            break;
        }
    }

    fit.beta = beta;
    fit.sigma_sq = sigma_sq;
    fit.sigma_b_sq = sigma_b_sq;
    fit.iterations_used = iter;
    fit.converged = converged;
    fit.message = converged ? "" : "EM did not reach tolerance within max_iter";
    return fit;
}

}  // namespace sdpreg
