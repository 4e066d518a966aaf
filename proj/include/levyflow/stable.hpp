// Samplers for symmetric and isotropic alpha-stable laws.
//
// Scalar case: Chambers-Mallows-Stuck, normalized so the characteristic
// function is exp(-|u|^alpha). Multivariate isotropic case: Gaussian
// subordination X = sqrt(2A) G where A is one-sided (alpha/2)-stable with
// Laplace transform exp(-lambda^(alpha/2)), giving char. fn. exp(-||u||^alpha).
#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "levyflow/errors.hpp"
#include "levyflow/rng.hpp"

namespace levyflow {

struct StableParams {
    double alpha = 1.5;  // stability index, in (0, 2]
    double sigma = 1.0;  // noise intensity multiplying dL_t
    int dim = 1;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 2.0))
            throw ValidationError("stable: alpha must lie in (0, 2], got " + std::to_string(alpha));
        if (!(sigma > 0.0))
            throw ValidationError("stable: sigma must be positive, got " + std::to_string(sigma));
        if (dim < 1)
            throw ValidationError("stable: dim must be >= 1, got " + std::to_string(dim));
    }
};

// One draw from the standard symmetric alpha-stable law S_alpha(1, 0, 0).
inline double sample_standard_symmetric_stable(double alpha, Rng& rng) {
    const double u = std::numbers::pi * (rng.uniform() - 0.5);  // (-pi/2, pi/2)
    const double w = rng.exponential();
    if (alpha == 1.0) return std::tan(u);
    if (alpha == 2.0) return 2.0 * std::sin(u) * std::sqrt(w);  // N(0, 2), cf. exp(-u^2)
    const double cu = std::cos(u);
    return std::sin(alpha * u) / std::pow(cu, 1.0 / alpha) *
           std::pow(std::cos((1.0 - alpha) * u) / w, (1.0 - alpha) / alpha);
}

inline std::vector<double> sample_standard_symmetric_stable(double alpha, std::size_t count,
                                                            Rng& rng) {
    if (!(alpha > 0.0 && alpha <= 2.0))
        throw ValidationError("stable: alpha must lie in (0, 2], got " + std::to_string(alpha));
    if (count < 1) throw ValidationError("stable: count must be >= 1");
    std::vector<double> out(count);
    for (auto& x : out) x = sample_standard_symmetric_stable(alpha, rng);
    return out;
}

// One-sided positive a-stable variable, a in (0, 1), with E[exp(-s A)] = exp(-s^a).
// Zolotarev/Kanter representation.
inline double sample_positive_stable(double a, Rng& rng) {
    const double v = std::numbers::pi * rng.uniform_open();  // (0, pi)
    const double w = rng.exponential();
    return std::sin(a * v) / std::pow(std::sin(v), 1.0 / a) *
           std::pow(std::sin((1.0 - a) * v) / w, (1.0 - a) / a);
}

// One draw from the isotropic stable law in R^n with char. fn. exp(-||u||^alpha);
// writes `dim` components to out.
inline void sample_isotropic_stable_into(const StableParams& p, double* out, Rng& rng) {
    if (p.alpha == 2.0) {
        // Subordinator degenerates to A = 1: sqrt(2) times a standard Gaussian.
        for (int i = 0; i < p.dim; ++i) out[i] = std::numbers::sqrt2 * rng.gaussian();
        return;
    }
    const double a = sample_positive_stable(0.5 * p.alpha, rng);
    const double s = std::sqrt(2.0 * a);
    for (int i = 0; i < p.dim; ++i) out[i] = s * rng.gaussian();
}

inline std::vector<std::vector<double>> sample_isotropic_stable(const StableParams& p,
                                                                std::size_t count, Rng& rng) {
    p.validate();
    if (count < 1) throw ValidationError("stable: count must be >= 1");
    std::vector<std::vector<double>> out(count, std::vector<double>(static_cast<std::size_t>(p.dim)));
    for (auto& x : out) sample_isotropic_stable_into(p, x.data(), rng);
    return out;
}

}  // namespace levyflow
