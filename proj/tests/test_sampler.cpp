#include <doctest.h>

#include <cmath>
#include <vector>

#include "sdpreg/baselines.hpp"
#include "sdpreg/errors.hpp"
#include "sdpreg/sampler.hpp"
#include "support/geweke.hpp"
#include "support/stats.hpp"

using namespace sdpreg;
using test_support::mean_of;
using test_support::variance_of;

namespace {

PanelDataset one_obs_unit_design(double y) {
    PanelDataset data;
    data.p = 1;
    data.groups.push_back({Eigen::VectorXd::Constant(1, y), Eigen::MatrixXd::Ones(1, 1)});
    return data;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("beta update matches the closed-form conjugate posterior") {
    // p=1, one observation, X=1, adjusted response 2, sigma^2 = tau0^2 = 1:
    // posterior is N(1, 1/2)
    const PanelDataset data = one_obs_unit_design(2.0);
    const std::vector<double> offset = {0.0};
    RngStream rng(10);
    const int n = 40000;
    std::vector<double> draws;
    draws.reserve(n);
    for (int i = 0; i < n; ++i) {
        draws.push_back(update_beta(rng, data, offset, 1.0, 1.0)(0));
    }
    CHECK(std::fabs(mean_of(draws) - 1.0) < 0.02);
    CHECK(variance_of(draws) == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("beta update reaches the least-squares solution in the flat-prior limit") {
    RngStream rng(11);
    PanelDataset data;
    data.p = 2;
    for (int i = 0; i < 10; ++i) {
        PanelDataset::Group g;
        g.y.resize(5);
        g.X.resize(5, 2);
        for (int j = 0; j < 5; ++j) {
            g.X(j, 0) = rng.bernoulli(0.5) ? 1.0 : 0.0;
            g.X(j, 1) = rng.bernoulli(0.5) ? 1.0 : 0.0;
            g.y(j) = g.X(j, 0) * 2.0 - g.X(j, 1) + rng.normal(0.0, 1.0);
        }
        data.groups.push_back(g);
    }
    const Eigen::VectorXd ols = ols_fit(data).beta;
    const std::vector<double> offset(50, 0.0);
    // tiny noise variance pins the draw to the mean; huge tau0 removes shrink
    const Eigen::VectorXd draw = update_beta(rng, data, offset, 1e-12, 1e12);
    CHECK((draw - ols).norm() / ols.norm() < 1e-5);
}

TEST_CASE("beta update centers on zero for zero residuals") {
    const PanelDataset data = one_obs_unit_design(0.0);
    const std::vector<double> offset = {0.0};
    RngStream rng(12);
    const Eigen::VectorXd draw = update_beta(rng, data, offset, 1e-12, 1.0);
    CHECK(std::fabs(draw(0)) < 1e-5);
}

TEST_CASE("sigma2 update is the stated inverse gamma") {
    RngStream rng(13);
    SUBCASE("residuals {1,-1} with alpha0=2, lambda0=1 give IG(3,2)") {
        const std::vector<double> resid = {1.0, -1.0};
        const int n = 100000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += update_sigma2(rng, resid, 2.0, 1.0);
        CHECK(std::fabs(sum / n - 1.0) < 0.01);  // IG(3,2) mean = 1
    }
    SUBCASE("zero residuals keep the prior rate") {
        const std::vector<double> resid = {0.0, 0.0};
        const int n = 100000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += update_sigma2(rng, resid, 3.0, 2.0);
        CHECK(std::fabs(sum / n - 2.0 / 3.0) < 0.01);  // IG(4,2) mean = 2/3
    }
}

TEST_CASE("random-effect update shrinks exactly as the conditional dictates") {
    RngStream rng(14);
    SUBCASE("vanishing prior variance pins the effect at zero") {
        const Eigen::MatrixXd z = Eigen::MatrixXd::Ones(3, 1);
        const Eigen::VectorXd r = (Eigen::VectorXd(3) << 1.0, 2.0, -0.5).finished();
        const Eigen::VectorXd sb = Eigen::VectorXd::Constant(1, 1e-12);
        for (int i = 0; i < 50; ++i) {
            CHECK(std::fabs(update_random_effects_group(rng, z, r, 1.0, sb)(0)) < 1e-4);
        }
    }
    SUBCASE("single observation, unit variances") {
        const Eigen::MatrixXd z = Eigen::MatrixXd::Ones(1, 1);
        const Eigen::VectorXd r = Eigen::VectorXd::Constant(1, 2.0);
        const Eigen::VectorXd sb = Eigen::VectorXd::Ones(1);
        std::vector<double> draws;
        const int n = 40000;
        draws.reserve(n);
        for (int i = 0; i < n; ++i) {
            draws.push_back(update_random_effects_group(rng, z, r, 1.0, sb)(0));
        }
        CHECK(std::fabs(mean_of(draws) - 1.0) < 0.02);
        CHECK(variance_of(draws) == doctest::Approx(0.5).epsilon(0.04));
    }
    SUBCASE("large groups erase the shrinkage") {
        const int m = 10000;
        const Eigen::MatrixXd z = Eigen::MatrixXd::Ones(m, 1);
        const Eigen::VectorXd r = Eigen::VectorXd::Constant(m, 0.7);
        const Eigen::VectorXd sb = Eigen::VectorXd::Ones(1);
        const double draw = update_random_effects_group(rng, z, r, 1.0, sb)(0);
        CHECK(std::fabs(draw - 0.7) < 0.007 * 3.0);
    }
    SUBCASE("two-column block update matches the normal equations") {
        const int m = 4;
        Eigen::MatrixXd z(m, 2);
        z << 1, 8, 1, 10, 1, 12, 1, 14;
        const Eigen::VectorXd r = (Eigen::VectorXd(4) << 0.3, 0.5, 0.2, 0.9).finished();
        const Eigen::VectorXd sb = (Eigen::VectorXd(2) << 2.0, 0.5).finished();
        const double sigma_sq = 1.3;
        Eigen::MatrixXd prec = z.transpose() * z / sigma_sq;
        prec(0, 0) += 1.0 / sb(0);
        prec(1, 1) += 1.0 / sb(1);
        const Eigen::VectorXd mean = prec.llt().solve(z.transpose() * r / sigma_sq);
        const int n = 60000;
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(2);
        for (int i = 0; i < n; ++i) {
            acc += update_random_effects_group(rng, z, r, sigma_sq, sb);
        }
        CHECK((acc / n - mean).norm() < 0.02);
    }
}

TEST_CASE("sigma_b2 update is the stated inverse gamma") {
    RngStream rng(15);
    SUBCASE("all-zero effects, n=4, unit hyperparameters give IG(3,1)") {
        const std::vector<double> b = {0.0, 0.0, 0.0, 0.0};
        const int n = 100000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += update_sigma_b2(rng, b, 1.0, 1.0);
        CHECK(std::fabs(sum / n - 0.5) < 0.01);  // IG(3,1) mean = 1/2
    }
    SUBCASE("sum of squares 2 with n=2 gives IG(2,2)") {
        const std::vector<double> b = {1.0, -1.0};
        const int n = 200000;
        std::vector<double> draws;
        draws.reserve(n);
        for (int i = 0; i < n; ++i) draws.push_back(update_sigma_b2(rng, b, 1.0, 1.0));
        // IG(2,2) has infinite variance; check the median and the reciprocal
        // mean E[1/X] = shape/rate = 1 instead
        CHECK(test_support::median_of(draws) == doctest::Approx(1.1917).epsilon(0.02));
        double recip = 0.0;
        for (double x : draws) recip += 1.0 / x;
        CHECK(std::fabs(recip / n - 1.0) < 0.01);
    }
    SUBCASE("no groups is rejected upstream") {
        std::vector<double> empty;
        CHECK_THROWS_AS(update_sigma_b2(rng, empty, 1.0, 1.0), Error);
    }
}

TEST_CASE("chain configuration is validated") {
    ChainConfig bad;
    bad.burn_in = bad.iterations;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = ChainConfig{};
    bad.thin = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK(ChainConfig{}.retained() == 5000);
    CHECK_THROWS_AS(parse_variant("B4"), Error);
}

TEST_CASE("near-noiseless conjugate regression recovers the truth") {
    RngStream rng(16);
    GenerativeConfig gen;
    gen.beta0 = (Eigen::VectorXd(2) << -1.0, 1.0).finished();
    gen.error = ErrorSpec::parse(R"({"kind":"uniform","lo":-1e-4,"hi":1e-4})");
    gen.random_effect_sd = 0.0;
    const PanelDataset data = simulate_dataset(rng, gen);
    ChainConfig chain;
    chain.iterations = 1500;
    chain.burn_in = 500;
    chain.seed = 16;
    const PosteriorSummary summary = run_chain(data, PriorConfig{}, chain, Variant::B1);
    CHECK((summary.beta_mean() - gen.beta0).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("fixed seeds reproduce the whole summary") {
    RngStream rng(17);
    GenerativeConfig gen;
    gen.error = ErrorSpec::parse("E8");
    gen.num_groups = 8;
    gen.group_size = 4;
    const PanelDataset data = simulate_dataset(rng, gen);
    ChainConfig chain;
    chain.iterations = 300;
    chain.burn_in = 100;
    chain.seed = 99;
    const PosteriorSummary a = run_chain(data, PriorConfig{}, chain, Variant::B3);
    const PosteriorSummary b = run_chain(data, PriorConfig{}, chain, Variant::B3);
    CHECK(a.draws == b.draws);
}

TEST_CASE("frozen latents reduce the mixture sampler to the normal-error chain") {
    RngStream rng(18);
    GenerativeConfig gen;
    gen.error = ErrorSpec::parse("E7");
    gen.num_groups = 10;
    gen.group_size = 4;
    const PanelDataset data = simulate_dataset(rng, gen);
    ChainConfig chain;
    chain.iterations = 400;
    chain.burn_in = 100;
    chain.seed = 5;
    SamplerOptions freeze;
    freeze.freeze_latents_at_zero = true;
    const PosteriorSummary b2 = run_chain(data, PriorConfig{}, chain, Variant::B2);
    const PosteriorSummary b3f = run_chain(data, PriorConfig{}, chain, Variant::B3, freeze);
    // identical update sequence, identical stream: the draws must agree bitwise
    const Eigen::Index common = 4;  // beta_1, beta_2, sigma2, sigma
    CHECK(b2.draws.leftCols(common) == b3f.draws.leftCols(common));
}

TEST_CASE("negating the responses negates the coefficient posterior") {
    RngStream rng(19);
    GenerativeConfig gen;
    gen.error = ErrorSpec::parse("E8");
    gen.num_groups = 15;
    gen.group_size = 4;
    PanelDataset data = simulate_dataset(rng, gen);
    ChainConfig chain;
    chain.iterations = 3000;
    chain.burn_in = 500;
    chain.seed = 20;
    const PosteriorSummary pos = run_chain(data, PriorConfig{}, chain, Variant::B3);
    for (auto& g : data.groups) g.y = -g.y;
    chain.seed = 21;
    const PosteriorSummary neg = run_chain(data, PriorConfig{}, chain, Variant::B3);
    // agreement within a few Monte Carlo standard errors of each chain mean
    for (int k = 0; k < 2; ++k) {
        const double se = (pos.params[k].sd + neg.params[k].sd) / std::sqrt(150.0);
        CHECK(std::fabs(pos.params[k].mean + neg.params[k].mean) < 4.0 * se + 0.02);
    }
}

TEST_CASE("permuting groups leaves the posterior unchanged up to Monte Carlo error") {
    RngStream rng(22);
    GenerativeConfig gen;
    gen.error = ErrorSpec::parse("E9");
    gen.num_groups = 12;
    gen.group_size = 5;
    const PanelDataset data = simulate_dataset(rng, gen);
    PanelDataset permuted;
    permuted.p = data.p;
    for (std::size_t i = 0; i < data.groups.size(); ++i) {
        permuted.groups.push_back(data.groups[(i * 5 + 3) % data.groups.size()]);
    }
    ChainConfig chain;
    chain.iterations = 3000;
    chain.burn_in = 500;
    chain.seed = 23;
    const PosteriorSummary a = run_chain(data, PriorConfig{}, chain, Variant::B3);
    chain.seed = 24;
    const PosteriorSummary b = run_chain(permuted, PriorConfig{}, chain, Variant::B3);
    for (int k = 0; k < 2; ++k) {
        const double se = (a.params[k].sd + b.params[k].sd) / std::sqrt(150.0);
        CHECK(std::fabs(a.params[k].mean - b.params[k].mean) < 4.0 * se + 0.02);
    }
}

TEST_CASE("requesting a random-effect design under B1 is a configuration error") {
    const PanelDataset data = one_obs_unit_design(1.0);
    std::vector<Eigen::MatrixXd> re = {Eigen::MatrixXd::Ones(1, 1)};
    CHECK_THROWS_AS(GibbsSampler(data, re, PriorConfig{}, ModelStructure{0, false}), Error);
    try {
        GibbsSampler sampler(data, re, PriorConfig{}, ModelStructure{0, false});
    } catch (const Error& e) {
        CHECK(e.category() == "config");
    }
}

TEST_CASE("joint-distribution check for the normal-error variants") {
    const PriorConfig priors = test_support::geweke_priors();
    SUBCASE("B1") {
        const auto z = test_support::run_geweke(Variant::B1, 4, 3, priors, 10000, 31);
        INFO("z: ", z.beta, " ", z.beta_sq, " ", z.sigma_sq);
        CHECK(z.max_abs() < 4.0);
    }
    SUBCASE("B2") {
        const auto z = test_support::run_geweke(Variant::B2, 4, 3, priors, 10000, 32);
        INFO("z: ", z.beta, " ", z.beta_sq, " ", z.sigma_sq, " ", z.sigma_b_sq);
        CHECK(z.max_abs() < 4.0);
    }
}

TEST_CASE("joint-distribution check for the mixture sampler") {
    const PriorConfig priors = test_support::geweke_priors();
    const auto z = test_support::run_geweke(Variant::B3, 4, 3, priors, 10000, 33);
    INFO("z: ", z.beta, " ", z.beta_sq, " ", z.sigma_sq, " ", z.sigma_b_sq);
    CHECK(z.max_abs() < 4.0);
}

TEST_CASE("latent-class residual formation") {
    RngStream rng(36);
    GenerativeConfig gen;
    gen.error = ErrorSpec::parse("E9");
    gen.num_groups = 5;
    gen.group_size = 3;
    const PanelDataset data = simulate_dataset(rng, gen);
    std::vector<Eigen::MatrixXd> re;
    for (const auto& g : data.groups) re.push_back(Eigen::MatrixXd::Ones(g.y.size(), 1));

    SUBCASE("zero coefficients and effects leave the raw responses") {
        GibbsSampler sampler(data, re, PriorConfig{}, ModelStructure{1, true});
        // deterministic init is beta = 0, b = 0
        const std::vector<double> e = sampler.current_residuals();
        const std::vector<double> y = sampler.responses_flat();
        CHECK(e == y);
    }
    SUBCASE("shifting a coefficient and the responses in tandem cancels exactly") {
        const double delta = 0.37;
        PanelDataset shifted = data;
        for (auto& g : shifted.groups) g.y += delta * g.X.col(0);
        GibbsSampler a(data, re, PriorConfig{}, ModelStructure{1, true});
        GibbsSampler b(shifted, re, PriorConfig{}, ModelStructure{1, true});
        Eigen::VectorXd beta = (Eigen::VectorXd(2) << -0.4, 1.2).finished();
        a.mutable_state().beta = beta;
        beta(0) += delta;
        b.mutable_state().beta = beta;
        const std::vector<double> ra = a.current_residuals();
        const std::vector<double> rb = b.current_residuals();
        REQUIRE(ra.size() == rb.size());
        for (std::size_t i = 0; i < ra.size(); ++i) {
            CHECK(ra[i] == doctest::Approx(rb[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("full sweeps keep the class state valid for a long run") {
    RngStream rng(34);
    GenerativeConfig gen;
    gen.error = ErrorSpec::parse("E8");
    gen.num_groups = 6;
    gen.group_size = 4;
    const PanelDataset data = simulate_dataset(rng, gen);
    std::vector<Eigen::MatrixXd> re;
    for (const auto& g : data.groups) re.push_back(Eigen::MatrixXd::Ones(g.y.size(), 1));
    GibbsSampler sampler(data, re, PriorConfig{}, ModelStructure{1, true});
    RngStream chain_rng(35, 1);
    for (int sweep = 0; sweep < 1000; ++sweep) {
        sampler.sweep(chain_rng);  // gibbs_class_sweep validates invariants internally
    }
    CHECK(sampler.state().assign.size() == data.total_observations());
    CHECK(sampler.state().sigma_sq > 0.0);
}

}  // TEST_SUITE
