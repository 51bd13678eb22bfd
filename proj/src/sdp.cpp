#include "sdpreg/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdpreg/error_spec.hpp"
#include "sdpreg/errors.hpp"

namespace sdpreg {

void SdpPrior::validate() const {
    require(concentration > 0.0 && std::isfinite(concentration), "parameter",
            "SdpPrior: concentration must be finite and > 0");
    require(base_sd > 0.0 && std::isfinite(base_sd), "parameter",
            "SdpPrior: base sd must be finite and > 0");
}

double SymmetricMixingMeasure::total_atom_weight() const {
    double total = 0.0;
    for (const Atom& a : atoms) total += a.weight;
    return total;
}

double SymmetricMixingMeasure::density(double x, double kernel_sd) const {
    double p = 0.0;
    for (const Atom& a : atoms) {
        p += 0.5 * a.weight *
             (normal_pdf(x - a.location, kernel_sd) + normal_pdf(x + a.location, kernel_sd));
    }
    const double total = total_atom_weight();
    return total > 0.0 ? p / total : 0.0;
}

void SymmetricMixingMeasure::check_invariants() const {
    double total = remainder_mass;
    for (const Atom& a : atoms) {
        require(a.location >= 0.0, "internal", "mixing measure: atom location must be >= 0");
        require(a.weight >= 0.0, "internal", "mixing measure: atom weight must be >= 0");
        total += a.weight;
    }
    require(std::fabs(total - 1.0) <= 1e-12, "internal",
            "mixing measure: atom weights plus remainder must sum to 1");
}

double SdpPosterior::draw_base(RngStream& rng) const {
    // normal_mass on N(0, base_sd^2); the rest split evenly over the data atoms
    if (!data_atoms.empty() && rng.uniform01() >= normal_mass) {
        const auto k = static_cast<std::size_t>(rng.uniform01() * data_atoms.size());
        return data_atoms[std::min(k, data_atoms.size() - 1)];
    }
    return rng.normal(0.0, base_sd * base_sd);
}

SdpPosterior sdp_posterior(const SdpPrior& prior, std::span<const double> observations) {
    prior.validate();
    SdpPosterior post;
    const double n = static_cast<double>(observations.size());
    post.concentration = prior.concentration + n;
    post.normal_mass = prior.concentration / (prior.concentration + n);
    post.base_sd = prior.base_sd;
    post.data_atoms.assign(observations.begin(), observations.end());
    return post;
}

PredictiveLaw predictive_weights(const SdpPrior& prior, std::span<const double> observations) {
    prior.validate();
    PredictiveLaw law;
    const double n = static_cast<double>(observations.size());
    law.base_mass = prior.concentration / (prior.concentration + n);
    law.base_sd = prior.base_sd;
    law.points.reserve(2 * observations.size());
    const double point_mass = observations.empty() ? 0.0 : 0.5 / (prior.concentration + n);
    for (double theta : observations) {
        law.points.push_back({theta, point_mass});
        law.points.push_back({-theta, point_mass});
    }
    return law;
}

double PredictiveLaw::total_mass() const {
    double total = base_mass;
    for (const PointMass& p : points) total += p.mass;
    return total;
}

int default_truncation(double concentration, double remainder_target) {
    require(concentration > 0.0 && remainder_target > 0.0 && remainder_target < 1.0, "parameter",
            "default_truncation: bad arguments");
    const double k = 10.0 + 4.0 * concentration * std::log(1.0 / remainder_target);
    return static_cast<int>(std::ceil(k));
}

namespace {

SymmetricMixingMeasure stick_breaking_impl(RngStream& rng, const SdpPosterior& base,
                                           int truncation) {
    require(truncation >= 1, "parameter", "stick_breaking_sample: truncation must be >= 1");
    SymmetricMixingMeasure measure;
    measure.atoms.reserve(static_cast<std::size_t>(truncation));
    double stick_left = 1.0;
    for (int i = 0; i < truncation; ++i) {
        const double v = rng.beta(1.0, base.concentration);
        const double w = v * stick_left;
        stick_left *= (1.0 - v);
        const double theta = base.draw_base(rng);
        measure.atoms.push_back({std::fabs(theta), w});
    }
    measure.remainder_mass = stick_left;
    return measure;
}

}  // namespace

SymmetricMixingMeasure stick_breaking_sample(RngStream& rng, const SdpPrior& prior,
                                             int truncation) {
    return stick_breaking_impl(rng, sdp_posterior(prior, {}), truncation);
}

SymmetricMixingMeasure stick_breaking_sample(RngStream& rng, const SdpPosterior& posterior,
                                             int truncation) {
    return stick_breaking_impl(rng, posterior, truncation);
}

double draw_from_measure(RngStream& rng, const SymmetricMixingMeasure& measure,
                         const SdpPosterior& base) {
    const double u = rng.uniform01();
    double cum = 0.0;
    for (const SymmetricMixingMeasure::Atom& a : measure.atoms) {
        cum += a.weight;
        if (u < cum) {
            return rng.random_sign() > 0 ? a.location : -a.location;
        }
    }
    // landed in the truncation remainder: fall back on a fresh base draw
    const double theta = base.draw_base(rng);
    return rng.random_sign() > 0 ? std::fabs(theta) : -std::fabs(theta);
}

// ---------------------------------------------------------------------------
// ClassAssignment
// ---------------------------------------------------------------------------

ClassAssignment ClassAssignment::single_class(std::size_t n) {
    ClassAssignment a;
    a.labels_.assign(n, 0);
    a.signs_.assign(n, 1);
    if (n > 0) {
        a.locations_.assign(1, 0.0);
        a.counts_.assign(1, static_cast<int>(n));
        a.plus_counts_.assign(1, static_cast<int>(n));
    }
    return a;
}

ClassAssignment ClassAssignment::prior_draw(RngStream& rng, std::size_t n, const SdpPrior& prior) {
    prior.validate();
    ClassAssignment a;
    a.labels_.reserve(n);
    a.signs_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double denom = prior.concentration + static_cast<double>(i);
        int label;
        if (rng.uniform01() < prior.concentration / denom) {
            label = static_cast<int>(a.locations_.size());
            a.locations_.push_back(rng.normal(0.0, prior.base_sd * prior.base_sd));
            a.counts_.push_back(0);
            a.plus_counts_.push_back(0);
        } else {
            // pick an existing observation's class uniformly
            const std::size_t j = static_cast<std::size_t>(rng.uniform01() * i);
            label = a.labels_[std::min(j, i - 1)];
        }
        const int sign = rng.random_sign();
        a.labels_.push_back(label);
        a.signs_.push_back(static_cast<std::int8_t>(sign));
        a.counts_[label] += 1;
        if (sign > 0) a.plus_counts_[label] += 1;
    }
    return a;
}

ClassAssignment ClassAssignment::from_parts(std::vector<int> labels, std::vector<int> signs,
                                            std::vector<double> locations) {
    require(labels.size() == signs.size(), "parameter", "from_parts: label/sign size mismatch");
    ClassAssignment a;
    a.labels_ = std::move(labels);
    a.locations_ = std::move(locations);
    a.signs_.reserve(signs.size());
    for (int s : signs) {
        require(s == 1 || s == -1, "parameter", "from_parts: signs must be +-1");
        a.signs_.push_back(static_cast<std::int8_t>(s));
    }
    a.counts_.assign(a.locations_.size(), 0);
    a.plus_counts_.assign(a.locations_.size(), 0);
    for (std::size_t i = 0; i < a.labels_.size(); ++i) {
        const int c = a.labels_[i];
        require(c >= 0 && static_cast<std::size_t>(c) < a.locations_.size(), "parameter",
                "from_parts: label out of range");
        a.counts_[c] += 1;
        if (a.signs_[i] > 0) a.plus_counts_[c] += 1;
    }
    a.check_invariants();
    return a;
}

std::vector<double> ClassAssignment::latents() const {
    std::vector<double> z(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) z[i] = latent(i);
    return z;
}

void ClassAssignment::check_invariants() const {
    require(labels_.size() == signs_.size(), "internal", "ClassAssignment: label/sign size mismatch");
    require(locations_.size() == counts_.size() && counts_.size() == plus_counts_.size(),
            "internal", "ClassAssignment: per-class array size mismatch");
    std::vector<int> counts(locations_.size(), 0);
    std::vector<int> plus(locations_.size(), 0);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const int c = labels_[i];
        require(c >= 0 && static_cast<std::size_t>(c) < locations_.size(), "internal",
                "ClassAssignment: label out of range");
        require(signs_[i] == 1 || signs_[i] == -1, "internal", "ClassAssignment: sign must be +-1");
        counts[c] += 1;
        if (signs_[i] > 0) plus[c] += 1;
    }
    int total = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        require(counts[c] == counts_[c], "internal", "ClassAssignment: stale count cache");
        require(plus[c] == plus_counts_[c], "internal", "ClassAssignment: stale sign-count cache");
        require(counts[c] > 0, "internal", "ClassAssignment: empty class persisted");
        total += counts[c];
    }
    require(total == static_cast<int>(labels_.size()), "internal",
            "ClassAssignment: counts do not add up to the number of observations");
}

double class_state_log_joint(const ClassAssignment& assign, std::span<const double> residuals,
                             double kernel_sd, const SdpPrior& prior) {
    prior.validate();
    require(residuals.size() == assign.size(), "dimension",
            "class_state_log_joint: residual count mismatch");
    const auto n = assign.size();
    const auto k = assign.num_classes();
    // exchangeable partition prior: alpha^K prod_c (n_c - 1)! / prod_i (alpha + i - 1)
    double lp = static_cast<double>(k) * std::log(prior.concentration);
    for (std::size_t c = 0; c < k; ++c) lp += std::lgamma(static_cast<double>(assign.count(static_cast<int>(c))));
    for (std::size_t i = 0; i < n; ++i) lp -= std::log(prior.concentration + static_cast<double>(i));
    // fair signs and symmetric normal base over class locations
    lp += static_cast<double>(n) * std::log(0.5);
    for (std::size_t c = 0; c < k; ++c) {
        lp += log_normal_pdf(assign.location(static_cast<int>(c)), prior.base_sd);
    }
    for (std::size_t i = 0; i < n; ++i) {
        lp += log_normal_pdf(residuals[i] - assign.latent(i), kernel_sd);
    }
    return lp;
}

// ---------------------------------------------------------------------------
// Gibbs sweeps
// ---------------------------------------------------------------------------

struct ClassSweep {
    static void detach(ClassAssignment& a, std::size_t i) {
        const int c = a.labels_[i];
        a.counts_[c] -= 1;
        if (a.signs_[i] > 0) a.plus_counts_[c] -= 1;
        if (a.counts_[c] == 0) remove_class(a, c);
        a.labels_[i] = -1;
    }

    static void remove_class(ClassAssignment& a, int c) {
        const int last = static_cast<int>(a.locations_.size()) - 1;
        if (c != last) {
            a.locations_[c] = a.locations_[last];
            a.counts_[c] = a.counts_[last];
            a.plus_counts_[c] = a.plus_counts_[last];
            for (std::size_t j = 0; j < a.labels_.size(); ++j) {
                if (a.labels_[j] == last) a.labels_[j] = c;
            }
        }
        a.locations_.pop_back();
        a.counts_.pop_back();
        a.plus_counts_.pop_back();
    }

    static void attach(ClassAssignment& a, std::size_t i, int c, int sign) {
        a.labels_[i] = c;
        a.signs_[i] = static_cast<std::int8_t>(sign);
        a.counts_[c] += 1;
        if (sign > 0) a.plus_counts_[c] += 1;
    }

    static int push_class(ClassAssignment& a, double location) {
        a.locations_.push_back(location);
        a.counts_.push_back(0);
        a.plus_counts_.push_back(0);
        return static_cast<int>(a.locations_.size()) - 1;
    }
};

void gibbs_class_sweep(RngStream& rng, ClassAssignment& assign, std::span<const double> residuals,
                       double kernel_sd, const SdpPrior& prior, const ClassSweepOptions& options) {
    prior.validate();
    require(kernel_sd > 0.0 && std::isfinite(kernel_sd), "parameter",
            "gibbs_class_sweep: kernel sd must be finite and > 0");
    require(residuals.size() == assign.size(), "dimension",
            "gibbs_class_sweep: residual count does not match assignment size");
    const std::size_t n = residuals.size();
    if (n == 0) return;

    const double tau1_sq = prior.base_sd * prior.base_sd;
    const double sigma_sq = kernel_sd * kernel_sd;
    const double marginal_sd = std::sqrt(sigma_sq + tau1_sq);
    const double log_two_alpha = std::log(2.0 * prior.concentration);
    const double post_var = tau1_sq * sigma_sq / (tau1_sq + sigma_sq);
    const double post_shrink = tau1_sq / (tau1_sq + sigma_sq);

    std::vector<double> log_weights;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = residuals[i];
        ClassSweep::detach(assign, i);
        const std::size_t k = assign.num_classes();

        log_weights.assign(k + 1, 0.0);
        for (std::size_t c = 0; c < k; ++c) {
            const double theta = assign.locations_[c];
            const double lp_plus = log_normal_pdf(e - theta, kernel_sd);
            const double lp_minus = log_normal_pdf(e + theta, kernel_sd);
            const double hi = std::max(lp_plus, lp_minus);
            if (options.sign_count_weights) {
                const int n_plus = assign.plus_counts_[c];
                const int n_minus = assign.counts_[c] - n_plus;
                const double w = n_plus * std::exp(lp_plus - hi) + n_minus * std::exp(lp_minus - hi);
                log_weights[c] = w > 0.0 ? hi + std::log(w)
                                         : -std::numeric_limits<double>::infinity();
            } else {
                // mirrored urn: the pair {+theta, -theta} carries the whole
                // class count, so both kernel evaluations enter
                log_weights[c] = hi + std::log(assign.counts_[c] *
                                               (std::exp(lp_plus - hi) + std::exp(lp_minus - hi)));
            }
        }
        double aux_location = 0.0;
        if (options.new_cluster == NewClusterMode::Integrated) {
            log_weights[k] = log_two_alpha + log_normal_pdf(e, marginal_sd);
        } else {
            aux_location = rng.normal(0.0, tau1_sq);
            log_weights[k] = log_two_alpha + log_normal_pdf(e - aux_location, kernel_sd);
        }

        int chosen = static_cast<int>(rng.categorical_log(log_weights));
        int sign;
        if (chosen == static_cast<int>(k)) {
            // fresh class: fair sign first (the integrated weight is
            // sign-symmetric), then the location given that sign
            sign = options.new_cluster == NewClusterMode::AuxiliaryDraw ? assign.signs_[i]
                                                                        : rng.random_sign();
            const double location = rng.normal(post_shrink * sign * e, post_var);
            chosen = ClassSweep::push_class(assign, location);
        }
        // sign conditional given the class location
        {
            const double theta = assign.locations_[chosen];
            const double lw[2] = {log_normal_pdf(e - theta, kernel_sd),
                                  log_normal_pdf(e + theta, kernel_sd)};
            sign = rng.categorical_log(std::span<const double>(lw, 2)) == 0 ? 1 : -1;
        }
        ClassSweep::attach(assign, i, chosen, sign);
    }

    // conjugate refresh of every class location
    const std::size_t k = assign.num_classes();
    std::vector<double> signed_sums(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        signed_sums[assign.labels_[i]] += assign.signs_[i] * residuals[i];
    }
    for (std::size_t c = 0; c < k; ++c) {
        const double nc = assign.counts_[c];
        const double var = tau1_sq * sigma_sq / (nc * tau1_sq + sigma_sq);
        const double mean = tau1_sq * signed_sums[c] / (nc * tau1_sq + sigma_sq);
        assign.locations_[c] = rng.normal(mean, var);
    }
    assign.check_invariants();
}

void gibbs_direct_sweep(RngStream& rng, std::vector<double>& locations,
                        std::span<const double> data, double kernel_sd, const SdpPrior& prior,
                        const DirectSweepOptions& options) {
    prior.validate();
    require(kernel_sd > 0.0 && std::isfinite(kernel_sd), "parameter",
            "gibbs_direct_sweep: kernel sd must be finite and > 0");
    require(locations.size() == data.size(), "dimension",
            "gibbs_direct_sweep: state and data sizes differ");
    const std::size_t n = data.size();
    if (n == 0) return;

    const double tau1_sq = prior.base_sd * prior.base_sd;
    const double sigma_sq = kernel_sd * kernel_sd;
    const double marginal_sd = std::sqrt(sigma_sq + tau1_sq);
    const double log_two_alpha = std::log(2.0 * prior.concentration);
    const double post_var = tau1_sq * sigma_sq / (tau1_sq + sigma_sq);
    const double post_shrink = tau1_sq / (tau1_sq + sigma_sq);

    // options: fresh draw first, then the mirrored atoms +theta_j, -theta_j
    std::vector<double> log_weights(2 * n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = data[i];
        std::size_t idx = 0;
        log_weights[idx++] = options.likelihood_off ? log_two_alpha
                                                    : log_two_alpha + log_normal_pdf(x, marginal_sd);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (options.likelihood_off) {
                log_weights[idx++] = 0.0;
                log_weights[idx++] = 0.0;
            } else {
                log_weights[idx++] = log_normal_pdf(x - locations[j], kernel_sd);
                log_weights[idx++] = log_normal_pdf(x + locations[j], kernel_sd);
            }
        }
        const std::size_t pick = rng.categorical_log(log_weights);
        if (pick == 0) {
            locations[i] = options.likelihood_off
                               ? rng.normal(0.0, tau1_sq)
                               : rng.normal(post_shrink * x, post_var);
        } else {
            std::size_t j = (pick - 1) / 2;
            if (j >= i) ++j;  // account for the skipped own index
            locations[i] = (pick % 2 == 1) ? locations[j] : -locations[j];
        }
    }
}

}  // namespace sdpreg
