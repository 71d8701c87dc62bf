#pragma once

#include <string>

namespace welsch {

enum class LossFamily { welsch, huber, tukey, hampel, pinball, absolute, squared };

const char* to_string(LossFamily family);
LossFamily loss_family_from_string(const std::string& name);

/// Tagged description of a loss family and its tuning constants.
///
/// Only the constants belonging to the active family are read; the factories
/// below fill sensible defaults for the rest. Validation throws ConfigError.
struct LossSpec {
    LossFamily family = LossFamily::squared;
    double tau = 1.0;                       // welsch temperature
    double gamma = 1.0;                     // huber cutoff
    double c = 4.685;                       // tukey cutoff
    double a = 2.0, b = 4.0, r = 8.0;       // hampel corners, a <= b <= r
    double q = 0.5;                         // pinball quantile, in (0,1)

    static LossSpec welsch(double tau);
    static LossSpec huber(double gamma = 1.0);
    static LossSpec tukey(double c = 4.685);
    static LossSpec hampel(double a = 2.0, double b = 4.0, double r = 8.0);
    static LossSpec pinball(double q);
    static LossSpec absolute();
    static LossSpec squared();

    void validate() const;

    /// True for losses whose psi vanishes at infinity (welsch, tukey, hampel).
    bool redescending() const;
    /// True for losses safe to hand to a smooth optimizer; pinball and
    /// absolute go through IRLS instead.
    bool smooth() const;
};

/// Loss value rho(x). rho(0) == 0 for every family.
double rho(const LossSpec& spec, double x);

/// Influence function psi(x) = rho'(x). At kinks returns the one-sided average.
double psi(const LossSpec& spec, double x);

/// IRLS weight psi(x)/x with continuous extension weight(0) = 1, clamped to
/// [0, 1] for the families whose raw ratio is unbounded near zero (pinball,
/// absolute).
double weight(const LossSpec& spec, double x);

/// Second derivative rho''(x); one-sided average at kinks.
double curvature(const LossSpec& spec, double x);

}  // namespace welsch
