#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sdpreg/rng.hpp"

namespace sdpreg {

// Symmetrized Dirichlet process prior DP_S(concentration, N(0, base_sd^2)):
// the law of (P + P^-)/2 for P ~ DP(concentration, N(0, base_sd^2)), where
// P^- is the reflection of P about zero.
struct SdpPrior {
    double concentration = 1.0;
    double base_sd = 3.0;
    void validate() const;
};

// A realized symmetric mixing measure. Each stored atom is the mirrored pair
// {+location, -location} carrying mass weight/2 on each side (an atom at 0 is
// a single point of mass weight). Symmetry of the induced normal-mixture
// density holds by construction.
struct SymmetricMixingMeasure {
    struct Atom {
        double location;  // >= 0
        double weight;
    };
    std::vector<Atom> atoms;
    double remainder_mass = 0.0;  // stick-breaking truncation tail

    double total_atom_weight() const;
    // Induced error density sum_c (w_c/2)(phi_sd(x - z_c) + phi_sd(x + z_c)),
    // renormalized over the retained atoms (the remainder is excluded).
    double density(double x, double kernel_sd) const;
    void check_invariants() const;
};

// Conjugate posterior parameters of a DP_S prior after observing locations
// theta_1..theta_n: concentration alpha + n and base measure
// (alpha P0 + sum_i delta_{theta_i}) / (alpha + n).
struct SdpPosterior {
    double concentration = 1.0;
    double normal_mass = 1.0;  // alpha / (alpha + n), on N(0, base_sd^2)
    double base_sd = 3.0;
    std::vector<double> data_atoms;  // observed theta_i; mass 1/(alpha+n) each

    // One draw from the (unsymmetrized) base measure.
    double draw_base(RngStream& rng) const;
};

SdpPosterior sdp_posterior(const SdpPrior& prior, std::span<const double> observations);

// The predictive law of the next draw given past ones: mass base_mass on the
// symmetrized base (which equals N(0, base_sd^2) for the normal base), and
// explicit point masses on +theta_i and -theta_i.
struct PredictiveLaw {
    struct PointMass {
        double location;
        double mass;
    };
    double base_mass = 1.0;
    double base_sd = 3.0;
    std::vector<PointMass> points;

    double total_mass() const;
};

PredictiveLaw predictive_weights(const SdpPrior& prior, std::span<const double> observations);

// Truncation level with expected remainder (alpha/(1+alpha))^K below
// remainder_target (with margin).
int default_truncation(double concentration, double remainder_target = 1e-8);

// Truncated stick-breaking draw: K mirrored atom pairs with
// Beta(1, concentration) stick weights and |base draw| locations.
SymmetricMixingMeasure stick_breaking_sample(RngStream& rng, const SdpPrior& prior, int truncation);
SymmetricMixingMeasure stick_breaking_sample(RngStream& rng, const SdpPosterior& posterior,
                                             int truncation);

// One draw from a realized measure; the truncation remainder is resolved by
// a fresh base draw (mirrored fair sign applies to atoms and base alike).
double draw_from_measure(RngStream& rng, const SymmetricMixingMeasure& measure,
                         const SdpPosterior& base);

enum class NewClusterMode {
    Integrated,     // exact conjugate marginal weight 2*alpha*phi_sqrt(sd^2+tau1^2)(e)
    AuxiliaryDraw,  // single prior draw theta_new ~ N(0, tau1^2), weight 2*alpha*phi_sd(e - theta_new)
};

struct ClassSweepOptions {
    NewClusterMode new_cluster = NewClusterMode::Integrated;
    // Weight existing classes by n^+ phi(e - theta) + n^- phi(e + theta)
    // instead of the mirrored-urn n_c (phi(e - theta) + phi(e + theta)).
    // The sign-count form is not an exact conditional (its class-selection
    // marginal disagrees with the urn that the direct sampler uses); it is
    // kept for side-by-side comparison only.
    bool sign_count_weights = false;
};

// ---------------------------------------------------------------------------
// Latent class state for the class-indexed Gibbs sampler: per-observation
// labels and signs, per-class locations, with count caches n_c and n_c^+.
// ---------------------------------------------------------------------------
class ClassAssignment {
public:
    ClassAssignment() = default;

    // Everything in one class located at 0, all signs +1.
    static ClassAssignment single_class(std::size_t n);
    // Draw from the prior: CRP labels, N(0, base_sd^2) locations, fair signs.
    static ClassAssignment prior_draw(RngStream& rng, std::size_t n, const SdpPrior& prior);
    // Build from explicit parts (labels must use every class index).
    static ClassAssignment from_parts(std::vector<int> labels, std::vector<int> signs,
                                      std::vector<double> locations);

    std::size_t size() const { return labels_.size(); }
    std::size_t num_classes() const { return locations_.size(); }

    int label(std::size_t i) const { return labels_[i]; }
    int sign(std::size_t i) const { return signs_[i]; }
    double location(int c) const { return locations_[c]; }
    int count(int c) const { return counts_[c]; }
    int plus_count(int c) const { return plus_counts_[c]; }

    // z_i = s_i * theta_{c_i}
    double latent(std::size_t i) const { return signs_[i] * locations_[labels_[i]]; }
    std::vector<double> latents() const;

    // Throws Error("internal", ...) on inconsistent bookkeeping.
    void check_invariants() const;

private:
    friend struct ClassSweep;
    friend void gibbs_class_sweep(RngStream&, ClassAssignment&, std::span<const double>, double,
                                  const SdpPrior&, const ClassSweepOptions&);
    std::vector<int> labels_;
    std::vector<std::int8_t> signs_;
    std::vector<double> locations_;  // per class
    std::vector<int> counts_;        // per class: n_c
    std::vector<int> plus_counts_;   // per class: n_c^+
};

// Joint log density of the class state and residuals at fixed kernel sd:
// exchangeable partition prior over labels, symmetric normal base over class
// locations, fair signs, and the normal kernel likelihood.
double class_state_log_joint(const ClassAssignment& assign, std::span<const double> residuals,
                             double kernel_sd, const SdpPrior& prior);

// One full class-indexed Gibbs sweep over residuals: for each observation,
// reassign (label, sign) and draw fresh class locations on demand; afterwards
// resample every class location from its conjugate conditional. Empty classes
// are removed as they arise.
void gibbs_class_sweep(RngStream& rng, ClassAssignment& assign, std::span<const double> residuals,
                       double kernel_sd, const SdpPrior& prior, const ClassSweepOptions& options = {});

struct DirectSweepOptions {
    // Test hook: treat the likelihood as constant, so the chain targets the
    // prior predictive of the mixing locations.
    bool likelihood_off = false;
};

// One sweep of the direct sampler: each latent location is redrawn from the
// mirrored urn over the others plus a fresh conjugate draw.
void gibbs_direct_sweep(RngStream& rng, std::vector<double>& locations,
                        std::span<const double> data, double kernel_sd, const SdpPrior& prior,
                        const DirectSweepOptions& options = {});

}  // namespace sdpreg
