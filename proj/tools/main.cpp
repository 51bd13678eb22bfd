#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdpreg/errors.hpp"
#include "sdpreg/harness.hpp"

namespace {

using sdpreg::ChainConfig;
using sdpreg::PriorConfig;

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> split_doubles(const std::string& csv) {
    std::vector<double> out;
    for (const std::string& item : split_list(csv)) out.push_back(std::stod(item));
    return out;
}

// JSON config overriding prior/chain defaults, e.g.
//   {"priors": {"tau0_sq": 25, "concentration": 2}, "chain": {"iterations": 4000}}
void apply_config(const std::string& path, PriorConfig& priors, ChainConfig& chain) {
    std::ifstream in(path);
    sdpreg::require(static_cast<bool>(in), "io", "cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        sdpreg::fail("parse", std::string("config JSON: ") + e.what());
    }
    if (j.contains("priors")) {
        const auto& p = j["priors"];
        priors.tau0_sq = p.value("tau0_sq", priors.tau0_sq);
        priors.alpha0 = p.value("alpha0", priors.alpha0);
        priors.lambda0 = p.value("lambda0", priors.lambda0);
        priors.alpha1 = p.value("alpha1", priors.alpha1);
        priors.lambda1 = p.value("lambda1", priors.lambda1);
        priors.sdp.concentration = p.value("concentration", priors.sdp.concentration);
        priors.sdp.base_sd = p.value("base_sd", priors.sdp.base_sd);
    }
    if (j.contains("chain")) {
        const auto& c = j["chain"];
        chain.iterations = c.value("iterations", chain.iterations);
        chain.burn_in = c.value("burn_in", chain.burn_in);
        chain.thin = c.value("thin", chain.thin);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semiparametric Bayesian regression with symmetric Dirichlet-process mixture "
                 "errors: simulation study, growth-data fits, Gaussian-limit diagnostics"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON file overriding prior/chain defaults");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "Replicated efficiency experiment for one error law");
    std::string sim_error = "E6";
    int sim_reps = 100, sim_groups = 20, sim_group_size = 5, sim_threads = 0;
    std::string sim_methods = "F1,F2,B1,B2,B3";
    std::uint64_t sim_seed = 1;
    int sim_iters = 6000, sim_burnin = 1000, sim_thin = 1;
    double sim_sigma_b = 1.0;
    std::string sim_covariates = "bernoulli";
    std::string sim_out, sim_rep_out, sim_density_grid;
    bool sim_aux = false;
    sim->add_option("--error", sim_error, "Error law token E1..E9 or JSON spec");
    sim->add_option("--reps", sim_reps, "Number of replications");
    sim->add_option("--groups", sim_groups, "Number of groups n");
    sim->add_option("--group-size", sim_group_size, "Observations per group m");
    sim->add_option("--methods", sim_methods, "Comma list from F1,F2,B1,B2,B3");
    sim->add_option("--seed", sim_seed, "Master seed");
    sim->add_option("--iters", sim_iters, "Gibbs iterations per chain");
    sim->add_option("--burnin", sim_burnin, "Burn-in iterations");
    sim->add_option("--thin", sim_thin, "Thinning interval");
    sim->add_option("--sigma-b", sim_sigma_b, "Generating random-intercept sd");
    sim->add_option("--covariates", sim_covariates, "bernoulli | rademacher");
    sim->add_option("--threads", sim_threads, "Worker threads (0 = all cores)");
    sim->add_option("--out", sim_out, "Aggregate CSV path");
    sim->add_option("--per-rep-out", sim_rep_out, "Per-replication CSV path");
    sim->add_option("--density-grid", sim_density_grid, "Write the error density on a grid");
    sim->add_flag("--aux-new-cluster", sim_aux, "Use the auxiliary-draw new-cluster weight");

    // ---- fit ----
    auto* fit = app.add_subcommand("fit", "Fit a growth-data submodel M1..M5");
    std::string fit_model = "M5", fit_data, fit_out, fit_draw_log;
    std::uint64_t fit_seed = 1;
    int fit_iters = 6000, fit_burnin = 1000, fit_thin = 1;
    bool fit_aux = false;
    fit->add_option("--model", fit_model, "Submodel M1..M5");
    fit->add_option("--data", fit_data, "CSV path (subject,sex,age,distance)")->required();
    fit->add_option("--seed", fit_seed, "Chain seed");
    fit->add_option("--iters", fit_iters, "Gibbs iterations");
    fit->add_option("--burnin", fit_burnin, "Burn-in iterations");
    fit->add_option("--thin", fit_thin, "Thinning interval");
    fit->add_option("--out", fit_out, "Posterior summary CSV path");
    fit->add_option("--draw-log", fit_draw_log, "Retained-draw CSV path");
    fit->add_flag("--aux-new-cluster", fit_aux, "Use the auxiliary-draw new-cluster weight");

    // ---- bvm ----
    auto* bvm = app.add_subcommand("bvm", "Gaussian-limit diagnostic study");
    std::string bvm_error = "E8", bvm_out, bvm_model = "location";
    int bvm_n = 500, bvm_reps = 20, bvm_threads = 0, bvm_group_size = 5;
    double bvm_theta0 = 0.0, bvm_sigma_b = 1.0;
    std::uint64_t bvm_seed = 7;
    int bvm_iters = 6000, bvm_burnin = 1000, bvm_thin = 1;
    bvm->add_option("--model", bvm_model, "location | regression | random-intercept");
    bvm->add_option("--error", bvm_error, "Generating mixture token (E8, E9 or JSON)");
    bvm->add_option("--n", bvm_n, "Observations (or groups) per replication");
    bvm->add_option("--group-size", bvm_group_size, "Group size (random-intercept model)");
    bvm->add_option("--sigma-b", bvm_sigma_b, "True random-intercept sd");
    bvm->add_option("--reps", bvm_reps, "Replications");
    bvm->add_option("--theta0", bvm_theta0, "True location");
    bvm->add_option("--seed", bvm_seed, "Master seed");
    bvm->add_option("--iters", bvm_iters, "Gibbs iterations");
    bvm->add_option("--burnin", bvm_burnin, "Burn-in iterations");
    bvm->add_option("--thin", bvm_thin, "Thinning interval");
    bvm->add_option("--threads", bvm_threads, "Worker threads (0 = all cores)");
    bvm->add_option("--out", bvm_out, "Report CSV path");

    // ---- sdp-demo ----
    auto* demo = app.add_subcommand("sdp-demo", "Predictive weights and a stick-breaking draw");
    double demo_alpha = 1.0, demo_tau1 = 3.0;
    int demo_draws = 0;
    std::string demo_past, demo_out;
    std::uint64_t demo_seed = 1;
    demo->add_option("--alpha", demo_alpha, "Concentration");
    demo->add_option("--tau1", demo_tau1, "Base-measure sd");
    demo->add_option("--draws", demo_draws, "Sequential predictive draws to simulate");
    demo->add_option("--past", demo_past, "Comma list of explicit past draws");
    demo->add_option("--seed", demo_seed, "Seed");
    demo->add_option("--out", demo_out, "CSV path");

    try {
        app.parse(argc, argv);

        PriorConfig priors;
        ChainConfig chain;
        if (!config_path.empty()) apply_config(config_path, priors, chain);

        if (sim->parsed()) {
            sdpreg::ExperimentConfig cfg;
            cfg.error_token = sim_error;
            cfg.reps = sim_reps;
            cfg.groups = sim_groups;
            cfg.group_size = sim_group_size;
            cfg.methods = split_list(sim_methods);
            cfg.seed = sim_seed;
            cfg.chain = chain;
            cfg.chain.iterations = sim_iters;
            cfg.chain.burn_in = sim_burnin;
            cfg.chain.thin = sim_thin;
            cfg.priors = priors;
            cfg.random_effect_sd = sim_sigma_b;
            if (sim_covariates == "bernoulli") {
                cfg.covariates = sdpreg::CovariateLaw::BernoulliHalf;
            } else if (sim_covariates == "rademacher") {
                cfg.covariates = sdpreg::CovariateLaw::Rademacher;
            } else {
                sdpreg::fail("config", "unknown covariate law '" + sim_covariates + "'");
            }
            cfg.threads = sim_threads;
            if (sim_aux) cfg.sampler.class_sweep.new_cluster = sdpreg::NewClusterMode::AuxiliaryDraw;
            if (!sim_out.empty()) cfg.out_path = sim_out;
            if (!sim_rep_out.empty()) cfg.per_rep_out_path = sim_rep_out;
            if (!sim_density_grid.empty()) cfg.density_grid_path = sim_density_grid;
            const sdpreg::ResultTable table = cmd_simulate(cfg);
            std::cout << "experiment,method,mse,rel_eff,successes,failures\n";
            for (const sdpreg::MethodAggregate& a : table.aggregates) {
                std::cout << table.experiment << "," << a.method << "," << a.mse << ","
                          << a.rel_eff << "," << a.successes << "," << a.failures << "\n";
            }
        } else if (fit->parsed()) {
            ChainConfig c = chain;
            c.iterations = fit_iters;
            c.burn_in = fit_burnin;
            c.thin = fit_thin;
            c.seed = fit_seed;
            sdpreg::SamplerOptions options;
            if (fit_aux) options.class_sweep.new_cluster = sdpreg::NewClusterMode::AuxiliaryDraw;
            const auto summary = sdpreg::cmd_fit(
                sdpreg::parse_submodel(fit_model), fit_data, c, priors, options,
                fit_out.empty() ? std::nullopt : std::optional<std::string>(fit_out),
                fit_draw_log.empty() ? std::nullopt : std::optional<std::string>(fit_draw_log));
            std::cout << "parameter,mean,sd\n";
            for (const sdpreg::ParameterSummary& p : summary.params) {
                std::cout << p.name << "," << p.mean << "," << p.sd << "\n";
            }
        } else if (bvm->parsed()) {
            sdpreg::BvmStudyConfig cfg;
            cfg.model = sdpreg::parse_bvm_model(bvm_model);
            cfg.error_token = bvm_error;
            cfg.n = bvm_n;
            cfg.group_size = bvm_group_size;
            cfg.sigma_b = bvm_sigma_b;
            cfg.reps = bvm_reps;
            cfg.theta0 = bvm_theta0;
            cfg.seed = bvm_seed;
            cfg.chain = chain;
            cfg.chain.iterations = bvm_iters;
            cfg.chain.burn_in = bvm_burnin;
            cfg.chain.thin = bvm_thin;
            cfg.priors = priors;
            cfg.threads = bvm_threads;
            if (!bvm_out.empty()) cfg.out_path = bvm_out;
            const auto rows = sdpreg::cmd_bvm(cfg);
            std::cout << "n,rep,mean_gap,min_eig,max_eig,max_ks\n";
            for (const sdpreg::BvmRow& r : rows) {
                std::cout << r.n << "," << r.rep << "," << r.mean_gap << "," << r.min_eig << ","
                          << r.max_eig << "," << r.max_ks << "\n";
            }
        } else if (demo->parsed()) {
            sdpreg::SdpDemoConfig cfg;
            cfg.concentration = demo_alpha;
            cfg.base_sd = demo_tau1;
            cfg.draws = demo_draws;
            if (!demo_past.empty()) cfg.past_draws = split_doubles(demo_past);
            cfg.seed = demo_seed;
            if (!demo_out.empty()) cfg.out_path = demo_out;
            const auto rows = sdpreg::cmd_sdp_demo(cfg);
            std::cout << "kind,index,location,weight\n";
            for (const sdpreg::SdpDemoRow& r : rows) {
                std::cout << r.kind << "," << r.index << "," << r.location << "," << r.weight
                          << "\n";
            }
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: cli: " << e.what() << "\n";
        return 2;
    } catch (const sdpreg::Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 4;
    }
}
