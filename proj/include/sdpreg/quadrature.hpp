#pragma once

#include <functional>
#include <vector>

namespace sdpreg {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int subdivisions = 0;
    bool converged = false;
};

// Globally adaptive Gauss-Kronrod (G7,K15) on [a, b]. Splits the worst
// segment until the summed error estimate meets max(abs_tol, rel_tol*|value|)
// or the subdivision cap is hit (converged=false in that case; no throw, the
// caller decides).
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol = 1e-8, double abs_tol = 1e-12,
                                    int max_subdivisions = 2000);

// Same, but throws Error("quadrature", ...) carrying the achieved error
// estimate when the tolerance is not reached.
double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-8, double abs_tol = 1e-12,
                          int max_subdivisions = 2000);

// Gauss-Hermite rule for the physicists' weight: int e^{-t^2} f(t) dt
// ~ sum_i w_i f(t_i). Nodes are symmetric, in decreasing order.
struct GaussHermite {
    explicit GaussHermite(int n);
    std::vector<double> nodes;
    std::vector<double> weights;
};

}  // namespace sdpreg
