#include "sdpreg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "sdpreg/errors.hpp"

namespace sdpreg {

namespace {

// QUADPACK (G7, K15) abscissae and weights, outermost first.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b;
    double value;
    double error;
    bool operator<(const Segment& o) const {
        if (error != o.error) return error > o.error;  // largest error first
        return a < o.a;
    }
};

Segment evaluate_segment(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = kWgk[7] * fc;
    double gauss = kWg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kXgk[i];
        const double fsum = f(center - dx) + f(center + dx);
        kronrod += kWgk[i] * fsum;
        if (i % 2 == 1) gauss += kWg[i / 2] * fsum;
    }
    Segment s;
    s.a = a;
    s.b = b;
    s.value = kronrod * half;
    // |K15 - G7| is a conservative error estimate; keep a machine-precision
    // floor so fully resolved segments do not dominate the split queue.
    s.error = std::max(std::fabs(kronrod - gauss) * half,
                       50.0 * 2.22e-16 * std::fabs(s.value));
    return s;
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol, double abs_tol, int max_subdivisions) {
    require(a < b && std::isfinite(a) && std::isfinite(b), "parameter",
            "integrate_adaptive: requires finite a < b");
    std::multiset<Segment> segments;
    segments.insert(evaluate_segment(f, a, b));
    double total_value = segments.begin()->value;
    double total_error = segments.begin()->error;
    int splits = 0;

    while (total_error > std::max(abs_tol, rel_tol * std::fabs(total_value)) &&
           splits < max_subdivisions) {
        const Segment worst = *segments.begin();
        segments.erase(segments.begin());
        const double mid = 0.5 * (worst.a + worst.b);
        const Segment left = evaluate_segment(f, worst.a, mid);
        const Segment right = evaluate_segment(f, mid, worst.b);
        segments.insert(left);
        segments.insert(right);
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        ++splits;
        if (splits % 64 == 0) {
            // refresh the accumulators to control drift
            total_value = 0.0;
            total_error = 0.0;
            for (const Segment& s : segments) {
                total_value += s.value;
                total_error += s.error;
            }
        }
    }

    total_value = 0.0;
    total_error = 0.0;
    for (const Segment& s : segments) {
        total_value += s.value;
        total_error += s.error;
    }
    QuadratureResult r;
    r.value = total_value;
    r.error_estimate = total_error;
    r.subdivisions = splits;
    r.converged = total_error <= std::max(abs_tol, rel_tol * std::fabs(total_value));
    return r;
}

double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, double abs_tol, int max_subdivisions) {
    const QuadratureResult r = integrate_adaptive(f, a, b, rel_tol, abs_tol, max_subdivisions);
    if (!r.converged) {
        std::ostringstream os;
        os << "adaptive quadrature did not converge: achieved error estimate " << r.error_estimate
           << " after " << r.subdivisions << " subdivisions";
        fail("quadrature", os.str());
    }
    return r.value;
}

GaussHermite::GaussHermite(int n) {
    require(n >= 1 && n <= 512, "parameter", "GaussHermite: order must be in [1, 512]");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    constexpr double kEps = 1e-14;
    constexpr int kMaxIter = 64;
    const int m = (n + 1) / 2;
    double z = 0.0;
    double pp = 0.0;
    for (int i = 0; i < m; ++i) {
        // initial guesses per Numerical Recipes gauher
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * nodes[1];
        } else {
            z = 2.0 * z - nodes[i - 2];
        }
        for (int iter = 0; iter < kMaxIter; ++iter) {
            // orthonormal Hermite recurrence
            double p1 = std::pow(std::numbers::pi, -0.25);
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::fabs(z - z1) <= kEps) break;
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
}

}  // namespace sdpreg
