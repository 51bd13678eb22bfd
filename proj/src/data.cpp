#include "sdpreg/data.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "sdpreg/errors.hpp"

namespace sdpreg {

std::size_t PanelDataset::total_observations() const {
    std::size_t n = 0;
    for (const Group& g : groups) n += static_cast<std::size_t>(g.y.size());
    return n;
}

void PanelDataset::validate() const {
    require(!groups.empty(), "parameter", "PanelDataset: no groups");
    require(p >= 1, "parameter", "PanelDataset: covariate dimension must be >= 1");
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const Group& g = groups[i];
        require(g.y.size() >= 1, "parameter", "PanelDataset: empty group " + std::to_string(i));
        require(g.X.rows() == g.y.size() && g.X.cols() == p, "dimension",
                "PanelDataset: covariate shape mismatch in group " + std::to_string(i));
        require(g.y.allFinite() && g.X.allFinite(), "parameter",
                "PanelDataset: non-finite entry in group " + std::to_string(i));
    }
}

void GenerativeConfig::validate() const {
    require(num_groups >= 1 && group_size >= 1, "parameter",
            "GenerativeConfig: need at least one group and one observation per group");
    require(random_effect_sd >= 0.0 && std::isfinite(random_effect_sd), "parameter",
            "GenerativeConfig: random effect sd must be finite and >= 0");
    require(beta0.size() >= 1, "parameter", "GenerativeConfig: beta0 must be nonempty");
    error.validate();
    if (covariates == CovariateLaw::Fixed) {
        require(fixed_covariates.has_value(), "parameter",
                "GenerativeConfig: Fixed covariate law needs fixed_covariates");
        require(fixed_covariates->rows() ==
                        static_cast<Eigen::Index>(num_groups) * group_size &&
                    fixed_covariates->cols() == beta0.size(),
                "dimension", "GenerativeConfig: fixed_covariates shape mismatch");
    }
    if (covariates == CovariateLaw::ConstantOne) {
        require(beta0.size() == 1, "parameter",
                "GenerativeConfig: ConstantOne covariates need a scalar beta0");
    }
}

PanelDataset simulate_dataset(RngStream& rng, const GenerativeConfig& cfg) {
    cfg.validate();
    const int p = static_cast<int>(cfg.beta0.size());
    PanelDataset data;
    data.p = p;
    data.groups.resize(static_cast<std::size_t>(cfg.num_groups));
    Eigen::Index row = 0;
    for (int i = 0; i < cfg.num_groups; ++i) {
        PanelDataset::Group& g = data.groups[static_cast<std::size_t>(i)];
        g.y.resize(cfg.group_size);
        g.X.resize(cfg.group_size, p);
        for (int j = 0; j < cfg.group_size; ++j) {
            for (int k = 0; k < p; ++k) {
                switch (cfg.covariates) {
                    case CovariateLaw::BernoulliHalf:
                        g.X(j, k) = rng.bernoulli(0.5) ? 1.0 : 0.0;
                        break;
                    case CovariateLaw::Rademacher:
                        g.X(j, k) = rng.random_sign();
                        break;
                    case CovariateLaw::ConstantOne:
                        g.X(j, k) = 1.0;
                        break;
                    case CovariateLaw::Fixed:
                        g.X(j, k) = (*cfg.fixed_covariates)(row, k);
                        break;
                }
            }
            ++row;
        }
        const double b_i = cfg.random_effect_sd > 0.0
                               ? rng.normal(0.0, cfg.random_effect_sd * cfg.random_effect_sd)
                               : 0.0;
        for (int j = 0; j < cfg.group_size; ++j) {
            g.y(j) = g.X.row(j).dot(cfg.beta0) + b_i + cfg.error.sample(rng);
        }
    }
    return data;
}

double loglik_given_latents(const PanelDataset& data, const Eigen::VectorXd& beta, double sigma,
                            std::span<const double> z, std::span<const double> b) {
    require(sigma > 0.0 && std::isfinite(sigma), "parameter",
            "loglik_given_latents: sigma must be finite and > 0");
    require(beta.size() == data.p, "dimension", "loglik_given_latents: beta dimension mismatch");
    require(b.size() == data.num_groups(), "dimension",
            "loglik_given_latents: one random effect per group required");
    require(z.size() == data.total_observations(), "dimension",
            "loglik_given_latents: one latent location per observation required");
    double ll = 0.0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < data.groups.size(); ++i) {
        const PanelDataset::Group& g = data.groups[i];
        for (Eigen::Index j = 0; j < g.y.size(); ++j, ++idx) {
            const double resid = g.y(j) - g.X.row(j).dot(beta) - b[i] - z[idx];
            ll += log_normal_pdf(resid, sigma);
        }
    }
    return ll;
}

// ---------------------------------------------------------------------------
// Growth data
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line_no, const std::string& what) {
    std::ostringstream os;
    os << path << ":" << line_no << ": " << what;
    fail("parse", os.str());
}

}  // namespace

std::vector<GrowthRecord> load_growth_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("io", "cannot open '" + path + "'");
    std::string line;
    int line_no = 0;
    std::vector<GrowthRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "subject,sex,age,distance")
                parse_fail(path, line_no, "expected header 'subject,sex,age,distance'");
            continue;
        }
        std::istringstream ss(line);
        std::string field;
        GrowthRecord rec;
        if (!std::getline(ss, rec.subject, ',') || rec.subject.empty())
            parse_fail(path, line_no, "missing subject");
        if (!std::getline(ss, field, ','))
            parse_fail(path, line_no, "missing sex");
        try {
            rec.sex = std::stoi(field);
        } catch (...) {
            parse_fail(path, line_no, "sex is not an integer: '" + field + "'");
        }
        if (rec.sex != 0 && rec.sex != 1)
            parse_fail(path, line_no, "sex must be 0 (boy) or 1 (girl)");
        if (!std::getline(ss, field, ','))
            parse_fail(path, line_no, "missing age");
        try {
            rec.age = std::stod(field);
        } catch (...) {
            parse_fail(path, line_no, "age is not numeric: '" + field + "'");
        }
        if (!std::getline(ss, field, ','))
            parse_fail(path, line_no, "missing distance");
        try {
            rec.distance = std::stod(field);
        } catch (...) {
            parse_fail(path, line_no, "distance is not numeric: '" + field + "'");
        }
        if (!std::isfinite(rec.age) || !std::isfinite(rec.distance))
            parse_fail(path, line_no, "non-finite value");
        records.push_back(std::move(rec));
    }
    if (records.empty()) fail("parse", path + ": no data rows");
    return records;
}

SubModel parse_submodel(const std::string& token) {
    if (token == "M1") return SubModel::M1;
    if (token == "M2") return SubModel::M2;
    if (token == "M3") return SubModel::M3;
    if (token == "M4") return SubModel::M4;
    if (token == "M5") return SubModel::M5;
    fail("parse", "unknown submodel '" + token + "' (expected M1..M5)");
}

std::string submodel_name(SubModel m) {
    switch (m) {
        case SubModel::M1: return "M1";
        case SubModel::M2: return "M2";
        case SubModel::M3: return "M3";
        case SubModel::M4: return "M4";
        case SubModel::M5: return "M5";
    }
    fail("internal", "submodel_name: unreachable");
}

ModelStructure submodel_structure(SubModel m) {
    switch (m) {
        case SubModel::M1: return {0, false};  // no random effects, normal errors
        case SubModel::M2: return {1, false};  // random intercept, normal errors
        case SubModel::M3: return {1, true};   // random intercept, mixture errors
        case SubModel::M4: return {2, false};  // intercept + slope, normal errors
        case SubModel::M5: return {2, true};   // intercept + slope, mixture errors
    }
    fail("internal", "submodel_structure: unreachable");
}

GrowthDesign build_growth_design(const std::vector<GrowthRecord>& records, SubModel m) {
    require(!records.empty(), "parameter", "build_growth_design: no records");
    // group by subject in order of first appearance
    std::vector<std::string> order;
    std::map<std::string, std::vector<const GrowthRecord*>> by_subject;
    for (const GrowthRecord& r : records) {
        auto [it, inserted] = by_subject.try_emplace(r.subject);
        if (inserted) order.push_back(r.subject);
        it->second.push_back(&r);
    }

    GrowthDesign design;
    design.structure = submodel_structure(m);
    const int q = design.structure.num_random_effects;
    design.data.p = 4;
    design.beta_names = {"beta_0", "beta_1", "beta_2", "beta_3"};
    for (const std::string& subject : order) {
        const auto& rows = by_subject[subject];
        const int mi = static_cast<int>(rows.size());
        const int sex = rows.front()->sex;
        for (const GrowthRecord* r : rows) {
            require(r->sex == sex, "parse",
                    "build_growth_design: subject '" + subject + "' has inconsistent sex codes");
        }
        PanelDataset::Group g;
        g.y.resize(mi);
        g.X.resize(mi, 4);
        Eigen::MatrixXd z(mi, std::max(q, 0));
        for (int j = 0; j < mi; ++j) {
            const GrowthRecord* r = rows[static_cast<std::size_t>(j)];
            g.y(j) = r->distance;
            g.X(j, 0) = 1.0;
            g.X(j, 1) = r->sex;
            g.X(j, 2) = r->age;
            g.X(j, 3) = r->sex * r->age;
            if (q >= 1) z(j, 0) = 1.0;
            if (q >= 2) z(j, 1) = r->age;
        }
        design.data.groups.push_back(std::move(g));
        if (q >= 1) design.re_design.push_back(std::move(z));
    }
    design.data.validate();
    return design;
}

}  // namespace sdpreg
