#include "sdpreg/harness.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <thread>

#include "sdpreg/baselines.hpp"
#include "sdpreg/errors.hpp"
#include "sdpreg/sdp.hpp"

namespace sdpreg {

namespace {

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "io", "cannot open output file '" + path + "'");
    out << std::setprecision(10);
    return out;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs `reps` jobs over a small pool; job indices are claimed atomically so
// the assignment of work to threads never affects results (all randomness is
// keyed on the job index).
template <typename Job>
void parallel_for_reps(int reps, int threads, Job&& job) {
    if (reps <= 0) return;
    const int pool = std::min(resolve_threads(threads), reps);
    if (pool <= 1) {
        for (int r = 0; r < reps; ++r) job(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(pool));
    for (int t = 0; t < pool; ++t) {
        workers.emplace_back([&]() {
            for (;;) {
                const int r = next.fetch_add(1);
                if (r >= reps) return;
                job(r);
            }
        });
    }
    for (std::thread& w : workers) w.join();
}

// sub-stream layout per replication: data, then one chain stream per method
constexpr std::uint64_t kStreamsPerRep = 8;

}  // namespace

void ExperimentConfig::validate() const {
    require(reps >= 1, "config", "simulate: reps must be >= 1");
    require(!methods.empty(), "config", "simulate: at least one method required");
    for (const std::string& m : methods) {
        require(m == "F1" || m == "F2" || m == "B1" || m == "B2" || m == "B3", "config",
                "simulate: unknown method '" + m + "'");
    }
    chain.validate();
    priors.validate();
    ErrorSpec::parse(error_token);
    require(groups >= 1 && group_size >= 1, "config", "simulate: bad panel dimensions");
}

const MethodAggregate& ResultTable::aggregate(const std::string& method) const {
    for (const MethodAggregate& a : aggregates) {
        if (a.method == method) return a;
    }
    fail("parameter", "ResultTable: method '" + method + "' not present");
}

ResultTable cmd_simulate(const ExperimentConfig& cfg) {
    cfg.validate();
    const ErrorSpec error = ErrorSpec::parse(cfg.error_token);

    GenerativeConfig gen;
    gen.beta0 = cfg.beta0;
    gen.error = error;
    gen.random_effect_sd = cfg.random_effect_sd;
    gen.num_groups = cfg.groups;
    gen.group_size = cfg.group_size;
    gen.covariates = cfg.covariates;

    const std::size_t n_methods = cfg.methods.size();
    std::vector<RepMethodRecord> records(static_cast<std::size_t>(cfg.reps) * n_methods);

    parallel_for_reps(cfg.reps, cfg.threads, [&](int rep) {
        RngStream data_rng(cfg.seed, static_cast<std::uint64_t>(rep) * kStreamsPerRep);
        const PanelDataset data = simulate_dataset(data_rng, gen);
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            const std::string& method = cfg.methods[mi];
            RepMethodRecord rec;
            rec.rep = rep;
            rec.method = method;
            try {
                Eigen::VectorXd estimate;
                if (method == "F1") {
                    estimate = ols_fit(data).beta;
                } else if (method == "F2") {
                    estimate = mle_normal_normal(data).beta;
                } else {
                    ChainConfig chain = cfg.chain;
                    chain.seed = cfg.seed;
                    chain.stream_id =
                        static_cast<std::uint64_t>(rep) * kStreamsPerRep + 1 + mi;
                    estimate =
                        run_chain(data, cfg.priors, chain, parse_variant(method), cfg.sampler)
                            .beta_mean();
                }
                rec.ok = true;
                rec.sqerr = (estimate - cfg.beta0).squaredNorm();
            } catch (const Error& e) {
                rec.ok = false;
                rec.error_category = e.category();
            } catch (const std::exception&) {
                rec.ok = false;
                rec.error_category = "internal";
            }
            records[static_cast<std::size_t>(rep) * n_methods + mi] = std::move(rec);
        }
    });

    ResultTable table;
    table.experiment = cfg.error_token;
    table.records = std::move(records);

    double mse_b3 = std::numeric_limits<double>::quiet_NaN();
    table.aggregates.reserve(n_methods);
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
        MethodAggregate agg;
        agg.method = cfg.methods[mi];
        double sum = 0.0;
        for (int rep = 0; rep < cfg.reps; ++rep) {
            const RepMethodRecord& rec = table.records[static_cast<std::size_t>(rep) * n_methods + mi];
            if (rec.ok) {
                sum += rec.sqerr;
                agg.successes += 1;
            } else {
                agg.failures += 1;
            }
        }
        agg.mse = agg.successes > 0 ? sum / agg.successes
                                    : std::numeric_limits<double>::quiet_NaN();
        table.aggregates.push_back(agg);
        if (agg.method == "B3") mse_b3 = agg.mse;
    }
    for (MethodAggregate& agg : table.aggregates) {
        agg.rel_eff = agg.mse / mse_b3;
    }

    if (cfg.per_rep_out_path) {
        std::ofstream out = open_csv(*cfg.per_rep_out_path);
        out << "experiment,method,rep,sqerr\n";
        for (const RepMethodRecord& rec : table.records) {
            out << table.experiment << "," << rec.method << "," << rec.rep << ",";
            if (rec.ok) {
                out << rec.sqerr;
            } else {
                out << "nan";
            }
            out << "\n";
        }
    }
    if (cfg.out_path) {
        std::ofstream out = open_csv(*cfg.out_path);
        out << "experiment,method,mse,rel_eff\n";
        for (const MethodAggregate& agg : table.aggregates) {
            out << table.experiment << "," << agg.method << "," << agg.mse << "," << agg.rel_eff
                << "\n";
        }
    }
    if (cfg.density_grid_path) {
        std::ofstream out = open_csv(*cfg.density_grid_path);
        out << "x,density\n";
        for (int i = 0; i <= 800; ++i) {
            const double x = -8.0 + i * 0.02;
            out << x << "," << error.density(x) << "\n";
        }
    }
    return table;
}

PosteriorSummary cmd_fit(SubModel model, const std::string& data_path, const ChainConfig& chain,
                         const PriorConfig& priors, const SamplerOptions& options,
                         const std::optional<std::string>& out_path,
                         const std::optional<std::string>& draw_log_path) {
    const std::vector<GrowthRecord> records = load_growth_csv(data_path);
    GrowthDesign design = build_growth_design(records, model);
    PosteriorSummary summary =
        run_chain(design.data, std::move(design.re_design), priors, chain, design.structure,
                  options, design.beta_names, draw_log_path);

    // report rows shaped like the analysis table: betas, sigma, then the
    // random-effect sds present in the submodel
    std::vector<std::string> rows = design.beta_names;
    rows.push_back("sigma");
    const int q = design.structure.num_random_effects;
    if (q == 1) rows.push_back("sigma_b");
    if (q == 2) {
        rows.push_back("sigma_b1");
        rows.push_back("sigma_b2");
    }
    if (out_path) {
        std::ofstream out = open_csv(*out_path);
        out << "parameter,mean,sd,median,q025,q975\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const ParameterSummary& ps = summary.param(rows[i]);
            // q = 1 reports its single random-effect sd under the b1 label
            const std::string label = (q == 1 && ps.name == "sigma_b") ? "sigma_b1" : ps.name;
            out << label << "," << ps.mean << "," << ps.sd << "," << ps.median << "," << ps.q025
                << "," << ps.q975 << "\n";
        }
    }
    return summary;
}

BvmModelKind parse_bvm_model(const std::string& token) {
    if (token == "location") return BvmModelKind::Location;
    if (token == "regression") return BvmModelKind::Regression;
    if (token == "random-intercept") return BvmModelKind::RandomIntercept;
    fail("parse", "unknown bvm model '" + token +
                      "' (expected location, regression or random-intercept)");
}

std::vector<BvmRow> cmd_bvm(const BvmStudyConfig& cfg) {
    cfg.chain.validate();
    cfg.priors.validate();
    require(cfg.n >= 10, "config", "bvm: n must be >= 10");
    require(cfg.reps >= 0, "config", "bvm: reps must be >= 0");
    const ErrorSpec error = ErrorSpec::parse(cfg.error_token);
    TrueErrorModel truth;
    try {
        truth = TrueErrorModel::from_error_spec(error);
    } catch (const Error&) {
        fail("config",
             "bvm: the generating law must be a symmetric normal mixture for the Gaussian-limit "
             "hypotheses to hold; '" + cfg.error_token + "' is outside that class");
    }

    GenerativeConfig gen;
    ModelStructure structure{0, true};
    switch (cfg.model) {
        case BvmModelKind::Location:
            gen.beta0 = Eigen::VectorXd::Constant(1, cfg.theta0);
            gen.covariates = CovariateLaw::ConstantOne;
            gen.random_effect_sd = 0.0;
            gen.num_groups = cfg.n;
            gen.group_size = 1;
            break;
        case BvmModelKind::Regression:
            gen.beta0 = cfg.beta0;
            gen.covariates = CovariateLaw::BernoulliHalf;
            gen.random_effect_sd = 0.0;
            gen.num_groups = cfg.n;
            gen.group_size = 1;
            break;
        case BvmModelKind::RandomIntercept:
            require(cfg.sigma_b > 0.0, "config", "bvm: random-intercept truth needs sigma_b > 0");
            gen.beta0 = cfg.beta0;
            gen.covariates = CovariateLaw::BernoulliHalf;
            gen.random_effect_sd = cfg.sigma_b;
            gen.num_groups = cfg.n;
            gen.group_size = cfg.group_size;
            structure.num_random_effects = 1;
            break;
    }
    gen.error = error;

    // the design is balanced, so the group-score covariance is shared
    Eigen::MatrixXd v_eta;
    if (cfg.model == BvmModelKind::RandomIntercept) {
        v_eta = group_score_covariance(truth, cfg.sigma_b, cfg.group_size, cfg.gh_nodes,
                                       cfg.v_monte_carlo_reps, cfg.seed ^ 0x9e37u);
    }

    const int p = static_cast<int>(gen.beta0.size());
    std::vector<BvmRow> rows(static_cast<std::size_t>(cfg.reps));
    parallel_for_reps(cfg.reps, cfg.threads, [&](int rep) {
        RngStream data_rng(cfg.seed, static_cast<std::uint64_t>(rep) * kStreamsPerRep);
        const PanelDataset data = simulate_dataset(data_rng, gen);

        ChainConfig chain = cfg.chain;
        chain.seed = cfg.seed;
        chain.stream_id = static_cast<std::uint64_t>(rep) * kStreamsPerRep + 1;
        std::vector<Eigen::MatrixXd> re_design;
        if (structure.num_random_effects == 1) {
            for (const auto& g : data.groups) {
                re_design.push_back(Eigen::MatrixXd::Ones(g.y.size(), 1));
            }
        }
        const PosteriorSummary summary =
            run_chain(data, std::move(re_design), cfg.priors, chain, structure, cfg.sampler);

        CenteringResult centering;
        std::size_t scale_n = 0;
        if (cfg.model == BvmModelKind::RandomIntercept) {
            centering = centering_delta_random_intercept(truth, cfg.sigma_b, data, gen.beta0,
                                                         v_eta, cfg.gh_nodes);
            scale_n = data.num_groups();
        } else {
            centering = centering_delta(truth, data, gen.beta0);
            scale_n = data.total_observations();
        }
        const BvMReport report =
            gaussianity_report(summary.draws.leftCols(p), gen.beta0, centering, scale_n);
        BvmRow row;
        row.n = cfg.n;
        row.rep = rep;
        row.mean_gap = report.mean_gap;
        row.min_eig = report.cov_eigenvalues.minCoeff();
        row.max_eig = report.cov_eigenvalues.maxCoeff();
        row.max_ks = report.max_ks();
        rows[static_cast<std::size_t>(rep)] = row;
    });

    if (cfg.out_path) {
        std::ofstream out = open_csv(*cfg.out_path);
        out << "n,rep,mean_gap,min_eig,max_eig,max_ks\n";
        for (const BvmRow& row : rows) {
            out << row.n << "," << row.rep << "," << row.mean_gap << "," << row.min_eig << ","
                << row.max_eig << "," << row.max_ks << "\n";
        }
    }
    return rows;
}

std::vector<SdpDemoRow> cmd_sdp_demo(const SdpDemoConfig& cfg) {
    SdpPrior prior{cfg.concentration, cfg.base_sd};
    prior.validate();
    require(cfg.draws >= 0, "config", "sdp-demo: draws must be >= 0");
    RngStream rng(cfg.seed, 0);

    std::vector<double> past = cfg.past_draws;
    if (past.empty() && cfg.draws > 0) {
        // simulate the urn forward: each draw comes from the predictive of
        // the previous ones
        for (int i = 0; i < cfg.draws; ++i) {
            const PredictiveLaw law = predictive_weights(prior, past);
            std::vector<double> w;
            w.push_back(law.base_mass);
            for (const PredictiveLaw::PointMass& pm : law.points) w.push_back(pm.mass);
            const std::size_t pick = rng.categorical(w);
            if (pick == 0) {
                past.push_back(rng.normal(0.0, prior.base_sd * prior.base_sd));
            } else {
                past.push_back(law.points[pick - 1].location);
            }
        }
    }

    std::vector<SdpDemoRow> rows;
    const PredictiveLaw law = predictive_weights(prior, past);
    rows.push_back({"predictive_base", 0, 0.0, law.base_mass});
    for (std::size_t i = 0; i < law.points.size(); ++i) {
        rows.push_back({"predictive_atom", static_cast<int>(i), law.points[i].location,
                        law.points[i].mass});
    }
    const int truncation = default_truncation(prior.concentration);
    const SymmetricMixingMeasure stick = stick_breaking_sample(rng, prior, truncation);
    for (std::size_t i = 0; i < stick.atoms.size(); ++i) {
        rows.push_back({"stick_atom", static_cast<int>(i), stick.atoms[i].location,
                        stick.atoms[i].weight});
    }
    rows.push_back({"stick_remainder", 0, 0.0, stick.remainder_mass});

    if (cfg.out_path) {
        std::ofstream out = open_csv(*cfg.out_path);
        out << "kind,index,location,weight\n";
        for (const SdpDemoRow& row : rows) {
            out << row.kind << "," << row.index << "," << row.location << "," << row.weight
                << "\n";
        }
    }
    return rows;
}

}  // namespace sdpreg
