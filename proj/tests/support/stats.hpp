#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace test_support {

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0) {
    return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// One-sample Kolmogorov-Smirnov distance against a given CDF.
template <typename Cdf>
double ks_distance(std::vector<double> sample, Cdf cdf) {
    std::sort(sample.begin(), sample.end());
    const auto n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double c = cdf(sample[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - c);
        d = std::max(d, c - static_cast<double>(i) / n);
    }
    return d;
}

// Total variation between an empirical sample and an explicit mixed law:
// exact point masses (matched by exact float equality) plus a continuous
// density integrated over uniform bins on [-width, width] via its CDF.
struct MixedLawBins {
    std::vector<double> atom_locations;
    std::vector<double> atom_masses;
    double continuous_mass = 1.0;
    double width = 12.0;
    int bins = 24;

    template <typename Cdf>
    double tv_against_sample(const std::vector<double>& sample, Cdf continuous_cdf) const {
        const std::size_t n_atoms = atom_locations.size();
        std::vector<double> expected;
        std::vector<double> observed;
        expected.reserve(n_atoms + bins + 2);
        // atoms
        std::vector<std::size_t> atom_hits(n_atoms, 0);
        std::vector<double> rest;
        rest.reserve(sample.size());
        for (double x : sample) {
            bool matched = false;
            for (std::size_t a = 0; a < n_atoms; ++a) {
                if (x == atom_locations[a]) {
                    atom_hits[a] += 1;
                    matched = true;
                    break;
                }
            }
            if (!matched) rest.push_back(x);
        }
        const auto n = static_cast<double>(sample.size());
        for (std::size_t a = 0; a < n_atoms; ++a) {
            expected.push_back(atom_masses[a]);
            observed.push_back(static_cast<double>(atom_hits[a]) / n);
        }
        // continuous bins plus the two outer tails
        const double step = 2.0 * width / bins;
        std::vector<double> edges;
        for (int b = 0; b <= bins; ++b) edges.push_back(-width + b * step);
        std::vector<std::size_t> counts(static_cast<std::size_t>(bins) + 2, 0);
        for (double x : rest) {
            if (x < edges.front()) {
                counts.front() += 1;
            } else if (x >= edges.back()) {
                counts.back() += 1;
            } else {
                const int b = static_cast<int>((x - edges.front()) / step);
                counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1)) + 1] += 1;
            }
        }
        expected.push_back(continuous_mass * continuous_cdf(edges.front()));
        observed.push_back(static_cast<double>(counts.front()) / n);
        for (int b = 0; b < bins; ++b) {
            expected.push_back(continuous_mass *
                               (continuous_cdf(edges[b + 1]) - continuous_cdf(edges[b])));
            observed.push_back(static_cast<double>(counts[static_cast<std::size_t>(b) + 1]) / n);
        }
        expected.push_back(continuous_mass * (1.0 - continuous_cdf(edges.back())));
        observed.push_back(static_cast<double>(counts.back()) / n);

        double tv = 0.0;
        for (std::size_t i = 0; i < expected.size(); ++i) {
            tv += std::fabs(expected[i] - observed[i]);
        }
        return 0.5 * tv;
    }
};

}  // namespace test_support
