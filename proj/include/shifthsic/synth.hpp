#pragma once

// Synthetic AR(1) pairs driven by Extinct Gaussian innovations: a bivariate
// standard normal whose points inside the ball of radius r are discarded
// with probability p. The innovations are uncorrelated but dependent.

#include "shifthsic/error.hpp"
#include "shifthsic/random.hpp"
#include "shifthsic/statistic.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

namespace shifthsic {

enum class Coupling { dependent, independent };

inline std::string to_string(Coupling c) {
    return c == Coupling::dependent ? "dependent" : "independent";
}

struct ProcessConfig {
    double ar_coeff = 0.2;
    double extinction_rate = 0.5;
    double radius = 1.0;
    std::size_t length = 600;
    std::size_t burn_in = 1000;
    std::uint64_t seed = 0;
    Coupling coupling = Coupling::dependent;

    void validate() const {
        if (!(std::abs(ar_coeff) < 1.0)) {
            throw Error(ErrorKind::NonStationary, "AR coefficient must satisfy |a| < 1");
        }
        if (!(extinction_rate >= 0.0 && extinction_rate <= 1.0)) {
            throw Error(ErrorKind::InvalidInput, "extinction rate must lie in [0, 1]");
        }
        if (!(radius >= 0.0) || !std::isfinite(radius)) {
            throw Error(ErrorKind::InvalidInput, "radius must be finite and nonnegative");
        }
        if (length == 0) throw Error(ErrorKind::InvalidInput, "length must be positive");
    }
};

struct Innovation {
    double eps;  // drives X
    double eta;  // drives Y
};

inline constexpr std::size_t kExtinctionIterationCap = 1'000'000;

/// One Extinct Gaussian draw. A candidate (eta, eps) ~ N(0, I) with d ~ U[0,1)
/// is returned when it lies outside the ball of radius r or when d > p.
inline Innovation extinct_gaussian(double p, double r, Rng& rng) {
    const double r2 = r * r;
    for (std::size_t i = 0; i < kExtinctionIterationCap; ++i) {
        const double eta = rng.normal();
        const double eps = rng.normal();
        const double d = rng.uniform();
        if (eta * eta + eps * eps > r2 || d > p) return {eps, eta};
    }
    throw Error(ErrorKind::GeneratorStall, "extinct gaussian rejected " +
                                               std::to_string(kExtinctionIterationCap) + " candidates");
}

namespace detail {

inline SeriesPair simulate_dependent(const ProcessConfig& cfg, Rng& rng) {
    SeriesPair out;
    out.x.reserve(cfg.length);
    out.y.reserve(cfg.length);
    double x = 0.0;
    double y = 0.0;
    for (std::size_t t = 0; t < cfg.burn_in + cfg.length; ++t) {
        const Innovation e = extinct_gaussian(cfg.extinction_rate, cfg.radius, rng);
        x = cfg.ar_coeff * x + e.eps;
        y = cfg.ar_coeff * y + e.eta;
        if (t >= cfg.burn_in) {
            out.x.push_back(x);
            out.y.push_back(y);
        }
    }
    return out;
}

}  // namespace detail

/// X_t = a X_{t-1} + eps_t, Y_t = a Y_{t-1} + eta_t from X = Y = 0, with the
/// first burn_in steps discarded. In independent mode two dependent pairs are
/// drawn back to back from the same stream and X of the first is paired with
/// Y of the second.
inline SeriesPair simulate_pair(const ProcessConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    SeriesPair first = detail::simulate_dependent(cfg, rng);
    if (cfg.coupling == Coupling::independent) {
        SeriesPair second = detail::simulate_dependent(cfg, rng);
        first.y = std::move(second.y);
    }
    first.x_label = "x";
    first.y_label = "y";
    return first;
}

}  // namespace shifthsic
