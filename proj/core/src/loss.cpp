#include "welsch/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "welsch/errors.hpp"

namespace welsch {

namespace {

void require_finite(double x) {
    if (!std::isfinite(x)) {
        throw std::domain_error("loss evaluated at non-finite x");
    }
}

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace

const char* to_string(LossFamily family) {
    switch (family) {
        case LossFamily::welsch: return "welsch";
        case LossFamily::huber: return "huber";
        case LossFamily::tukey: return "tukey";
        case LossFamily::hampel: return "hampel";
        case LossFamily::pinball: return "pinball";
        case LossFamily::absolute: return "absolute";
        case LossFamily::squared: return "squared";
    }
    return "?";
}

LossFamily loss_family_from_string(const std::string& name) {
    if (name == "welsch") return LossFamily::welsch;
    if (name == "huber") return LossFamily::huber;
    if (name == "tukey") return LossFamily::tukey;
    if (name == "hampel") return LossFamily::hampel;
    if (name == "pinball" || name == "quantile") return LossFamily::pinball;
    if (name == "absolute" || name == "lad") return LossFamily::absolute;
    if (name == "squared" || name == "ols") return LossFamily::squared;
    throw ConfigError("unknown loss family: " + name);
}

LossSpec LossSpec::welsch(double tau) {
    LossSpec s;
    s.family = LossFamily::welsch;
    s.tau = tau;
    s.validate();
    return s;
}

LossSpec LossSpec::huber(double gamma) {
    LossSpec s;
    s.family = LossFamily::huber;
    s.gamma = gamma;
    s.validate();
    return s;
}

LossSpec LossSpec::tukey(double c) {
    LossSpec s;
    s.family = LossFamily::tukey;
    s.c = c;
    s.validate();
    return s;
}

LossSpec LossSpec::hampel(double a, double b, double r) {
    LossSpec s;
    s.family = LossFamily::hampel;
    s.a = a;
    s.b = b;
    s.r = r;
    s.validate();
    return s;
}

LossSpec LossSpec::pinball(double q) {
    LossSpec s;
    s.family = LossFamily::pinball;
    s.q = q;
    s.validate();
    return s;
}

LossSpec LossSpec::absolute() {
    LossSpec s;
    s.family = LossFamily::absolute;
    return s;
}

LossSpec LossSpec::squared() {
    LossSpec s;
    s.family = LossFamily::squared;
    return s;
}

void LossSpec::validate() const {
    switch (family) {
        case LossFamily::welsch:
            if (!(tau > 0) || !std::isfinite(tau)) throw ConfigError("welsch: tau must be > 0");
            break;
        case LossFamily::huber:
            if (!(gamma > 0) || !std::isfinite(gamma)) throw ConfigError("huber: gamma must be > 0");
            break;
        case LossFamily::tukey:
            if (!(c > 0) || !std::isfinite(c)) throw ConfigError("tukey: c must be > 0");
            break;
        case LossFamily::hampel:
            if (!(a > 0) || !(a <= b) || !(b <= r) || !std::isfinite(r)) {
                throw ConfigError("hampel: constants must satisfy 0 < a <= b <= r");
            }
            break;
        case LossFamily::pinball:
            if (!(q > 0) || !(q < 1)) throw ConfigError("pinball: q must lie strictly in (0,1)");
            break;
        case LossFamily::absolute:
        case LossFamily::squared:
            break;
    }
}

bool LossSpec::redescending() const {
    return family == LossFamily::welsch || family == LossFamily::tukey ||
           family == LossFamily::hampel;
}

bool LossSpec::smooth() const {
    return family != LossFamily::pinball && family != LossFamily::absolute;
}

double rho(const LossSpec& spec, double x) {
    require_finite(x);
    const double ax = std::abs(x);
    switch (spec.family) {
        case LossFamily::welsch:
            // -expm1 keeps full precision as tau -> 0, where rho -> x^2/2.
            return -std::expm1(-0.5 * spec.tau * x * x) / spec.tau;
        case LossFamily::huber:
            return ax <= spec.gamma ? 0.5 * x * x : spec.gamma * ax - 0.5 * spec.gamma * spec.gamma;
        case LossFamily::tukey: {
            if (ax >= spec.c) return spec.c * spec.c / 6.0;
            const double u = 1.0 - (x / spec.c) * (x / spec.c);
            return spec.c * spec.c / 6.0 * (1.0 - u * u * u);
        }
        case LossFamily::hampel: {
            const double a = spec.a, b = spec.b, r = spec.r;
            if (ax <= a) return 0.5 * x * x;
            if (ax <= b) return a * ax - 0.5 * a * a;
            if (ax >= r) return 0.5 * a * (b + r - a);
            return a * b - 0.5 * a * a +
                   a / (r - b) * (r * (ax - b) - 0.5 * (ax * ax - b * b));
        }
        case LossFamily::pinball:
            return x >= 0 ? spec.q * x : (spec.q - 1.0) * x;
        case LossFamily::absolute:
            return ax;
        case LossFamily::squared:
            return 0.5 * x * x;
    }
    return 0.0;
}

double psi(const LossSpec& spec, double x) {
    require_finite(x);
    const double ax = std::abs(x);
    switch (spec.family) {
        case LossFamily::welsch:
            return x * std::exp(-0.5 * spec.tau * x * x);
        case LossFamily::huber:
            return ax <= spec.gamma ? x : spec.gamma * sign(x);
        case LossFamily::tukey: {
            if (ax >= spec.c) return 0.0;
            const double u = 1.0 - (x / spec.c) * (x / spec.c);
            return x * u * u;
        }
        case LossFamily::hampel: {
            const double a = spec.a, b = spec.b, r = spec.r;
            if (ax <= a) return x;
            if (ax < b) return a * sign(x);
            // psi is continuous at b and r unless the slope band is empty
            // (b == r), where the one-sided average applies.
            if (ax == b) return r > b ? a * sign(x) : 0.5 * a * sign(x);
            if (ax >= r) return 0.0;
            return a * sign(x) * (r - ax) / (r - b);
        }
        case LossFamily::pinball:
            if (x > 0) return spec.q;
            if (x < 0) return spec.q - 1.0;
            return spec.q - 0.5;  // subgradient midpoint
        case LossFamily::absolute:
            return sign(x);
        case LossFamily::squared:
            return x;
    }
    return 0.0;
}

double weight(const LossSpec& spec, double x) {
    require_finite(x);
    if (x == 0.0) return 1.0;
    switch (spec.family) {
        case LossFamily::welsch:
            return std::exp(-0.5 * spec.tau * x * x);
        case LossFamily::pinball:
        case LossFamily::absolute: {
            const double raw = psi(spec, x) / x;
            return raw > 1.0 ? 1.0 : raw;
        }
        default:
            return psi(spec, x) / x;
    }
}

double curvature(const LossSpec& spec, double x) {
    require_finite(x);
    const double ax = std::abs(x);
    switch (spec.family) {
        case LossFamily::welsch: {
            const double txx = spec.tau * x * x;
            return std::exp(-0.5 * txx) * (1.0 - txx);
        }
        case LossFamily::huber:
            if (ax == spec.gamma) return 0.5;
            return ax < spec.gamma ? 1.0 : 0.0;
        case LossFamily::tukey: {
            if (ax >= spec.c) return 0.0;
            const double v = (x / spec.c) * (x / spec.c);
            return (1.0 - v) * (1.0 - 5.0 * v);
        }
        case LossFamily::hampel: {
            const double a = spec.a, b = spec.b, r = spec.r;
            const double mid = r > b ? -a / (r - b) : 0.0;
            if (ax == a) return 0.5;
            if (ax < a) return 1.0;
            if (ax == b) return 0.5 * mid;
            if (ax < b) return 0.0;
            if (ax == r) return 0.5 * mid;
            if (ax < r) return mid;
            return 0.0;
        }
        case LossFamily::pinball:
        case LossFamily::absolute:
            return 0.0;
        case LossFamily::squared:
            return 1.0;
    }
    return 0.0;
}

}  // namespace welsch
