#include "sdpreg/error_spec.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "sdpreg/errors.hpp"

namespace sdpreg {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

// Regularized incomplete beta I_x(a, b) via the standard Lentz continued
// fraction; accurate enough for tail probabilities of the t family.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double reg_inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_log_pdf(double df, double x) {
    return std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
           0.5 * std::log(df * std::numbers::pi) -
           0.5 * (df + 1.0) * std::log1p(x * x / df);
}

}  // namespace

double normal_pdf(double x, double sd) {
    const double u = x / sd;
    return kInvSqrt2Pi / sd * std::exp(-0.5 * u * u);
}

double log_normal_pdf(double x, double sd) {
    const double u = x / sd;
    return -0.5 * u * u - std::log(sd) + std::log(kInvSqrt2Pi);
}

double student_t_upper_tail(double df, double t) {
    require(df > 0.0 && t >= 0.0, "parameter", "student_t_upper_tail: df > 0 and t >= 0 required");
    return 0.5 * reg_inc_beta(0.5 * df, 0.5, df / (df + t * t));
}

ErrorSpec ErrorSpec::student_t(double df) {
    ErrorSpec s;
    s.kind = ErrorKind::StudentT;
    s.df = df;
    s.validate();
    return s;
}

ErrorSpec ErrorSpec::standard_normal() {
    ErrorSpec s;
    s.kind = ErrorKind::StandardNormal;
    return s;
}

ErrorSpec ErrorSpec::uniform(double lo, double hi) {
    ErrorSpec s;
    s.kind = ErrorKind::Uniform;
    s.lo = lo;
    s.hi = hi;
    s.validate();
    return s;
}

ErrorSpec ErrorSpec::sym_mixture(std::vector<double> centers, std::vector<double> weights,
                                 double component_sd) {
    ErrorSpec s;
    s.kind = ErrorKind::SymMixture;
    s.centers = std::move(centers);
    s.weights = std::move(weights);
    s.component_sd = component_sd;
    s.validate();
    return s;
}

ErrorSpec ErrorSpec::parse(const std::string& token_or_json) {
    if (token_or_json.size() == 2 && token_or_json[0] == 'E') {
        switch (token_or_json[1]) {
            case '1': return student_t(1.0);
            case '2': return student_t(2.0);
            case '3': return student_t(4.0);
            case '4': return student_t(8.0);
            case '5': return student_t(16.0);
            case '6': return standard_normal();
            case '7': return uniform(-3.0, 3.0);
            case '8': return sym_mixture({0.0, 1.5, 2.5, 3.5}, {0.1, 0.2, 0.15, 0.05});
            case '9': return sym_mixture({0.0, 1.0, 2.0, 4.0}, {0.05, 0.15, 0.1, 0.2});
            default: break;
        }
        fail("parse", "unknown error law token '" + token_or_json + "' (expected E1..E9)");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(token_or_json);
    } catch (const nlohmann::json::exception& e) {
        fail("parse", std::string("error spec is neither E1..E9 nor valid JSON: ") + e.what());
    }
    const std::string kind = j.value("kind", "");
    if (kind == "student_t") return student_t(j.at("df").get<double>());
    if (kind == "standard_normal") return standard_normal();
    if (kind == "uniform") return uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
    if (kind == "sym_mixture") {
        return sym_mixture(j.at("centers").get<std::vector<double>>(),
                           j.at("weights").get<std::vector<double>>(),
                           j.value("component_sd", 1.0));
    }
    fail("parse", "unknown error spec kind '" + kind + "'");
}

void ErrorSpec::validate() const {
    switch (kind) {
        case ErrorKind::StudentT:
            require(df > 0.0 && std::isfinite(df), "parameter", "ErrorSpec: t df must be > 0");
            break;
        case ErrorKind::StandardNormal:
            break;
        case ErrorKind::Uniform:
            require(lo < hi && std::isfinite(lo) && std::isfinite(hi), "parameter",
                    "ErrorSpec: uniform requires lo < hi");
            break;
        case ErrorKind::SymMixture: {
            require(!centers.empty() && centers.size() == weights.size(), "parameter",
                    "ErrorSpec: mixture needs matching nonempty centers/weights");
            require(component_sd > 0.0, "parameter", "ErrorSpec: component sd must be > 0");
            double total = 0.0;
            for (std::size_t k = 0; k < centers.size(); ++k) {
                require(std::isfinite(centers[k]) && centers[k] >= 0.0, "parameter",
                        "ErrorSpec: mixture centers must be finite and >= 0");
                require(weights[k] > 0.0, "parameter", "ErrorSpec: mixture weights must be > 0");
                total += weights[k];
            }
            // mirrored parameterization: total mass 2 * sum(pi_k) must be 1
            require(std::fabs(2.0 * total - 1.0) <= 1e-9, "parameter",
                    "ErrorSpec: mixture weights must sum to 1/2 (mirrored form)");
            break;
        }
    }
}

double ErrorSpec::density(double x) const {
    switch (kind) {
        case ErrorKind::StudentT:
            return std::exp(student_t_log_pdf(df, x));
        case ErrorKind::StandardNormal:
            return normal_pdf(x, 1.0);
        case ErrorKind::Uniform:
            return (x >= lo && x <= hi) ? 1.0 / (hi - lo) : 0.0;
        case ErrorKind::SymMixture: {
            double p = 0.0;
            for (std::size_t k = 0; k < centers.size(); ++k) {
                p += weights[k] *
                     (normal_pdf(x - centers[k], component_sd) + normal_pdf(x + centers[k], component_sd));
            }
            return p;
        }
    }
    fail("internal", "ErrorSpec: unreachable kind");
}

double ErrorSpec::sample(RngStream& rng) const {
    switch (kind) {
        case ErrorKind::StudentT:
            return rng.student_t(df);
        case ErrorKind::StandardNormal:
            return rng.standard_normal();
        case ErrorKind::Uniform:
            return rng.uniform(lo, hi);
        case ErrorKind::SymMixture: {
            const std::size_t k = rng.categorical(weights);
            const double center = rng.random_sign() > 0 ? centers[k] : -centers[k];
            return rng.normal(center, component_sd * component_sd);
        }
    }
    fail("internal", "ErrorSpec: unreachable kind");
}

double ErrorSpec::variance() const {
    switch (kind) {
        case ErrorKind::StudentT:
            return df > 2.0 ? df / (df - 2.0) : std::numeric_limits<double>::infinity();
        case ErrorKind::StandardNormal:
            return 1.0;
        case ErrorKind::Uniform: {
            const double w = hi - lo;
            return w * w / 12.0;  // symmetric laws only have zero mean; caller beware otherwise
        }
        case ErrorKind::SymMixture: {
            double v = 0.0;
            for (std::size_t k = 0; k < centers.size(); ++k) {
                v += 2.0 * weights[k] * (component_sd * component_sd + centers[k] * centers[k]);
            }
            return v;
        }
    }
    fail("internal", "ErrorSpec: unreachable kind");
}

std::string ErrorSpec::describe() const {
    std::ostringstream os;
    switch (kind) {
        case ErrorKind::StudentT: os << "student_t(df=" << df << ")"; break;
        case ErrorKind::StandardNormal: os << "standard_normal"; break;
        case ErrorKind::Uniform: os << "uniform(" << lo << "," << hi << ")"; break;
        case ErrorKind::SymMixture:
            os << "sym_mixture(K=" << centers.size() << ",sd=" << component_sd << ")";
            break;
    }
    return os.str();
}

}  // namespace sdpreg
