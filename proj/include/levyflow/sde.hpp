// SDE specification and Euler-Maruyama short-burst simulation for
//   dx = b(x) dt + Lambda(x) dB_t + sigma dL_t
// with L_t an isotropic alpha-stable Levy motion. Bursts record only the
// endpoint x(t*) of each independent trajectory started at z.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levyflow/digest.hpp"
#include "levyflow/errors.hpp"
#include "levyflow/expr.hpp"
#include "levyflow/rng.hpp"
#include "levyflow/stable.hpp"

namespace levyflow {

// Points in R^n, n <= 2. The second component is ignored (and kept at 0)
// in one-dimensional systems.
using Point = std::array<double, 2>;

inline double norm(const Point& p, int dim) {
    return dim == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]);
}

struct SdeSpec {
    int dim = 1;
    std::vector<Expr> drift;                  // dim entries, b_i(x)
    std::vector<std::vector<Expr>> diffusion; // dim x dim, Lambda_ij(x)
    std::optional<StableParams> levy;         // absent => no Levy term
    double dt = 0.0;                          // 0 => default t_star / 1000
    double t_star = 0.01;

    double step_size() const { return dt > 0.0 ? dt : t_star * 1e-3; }

    std::size_t step_count() const {
        const double h = step_size();
        const double n = t_star / h;
        return static_cast<std::size_t>(std::llround(n));
    }

    bool diffusion_is_zero() const {
        for (const auto& row : diffusion)
            for (const auto& e : row)
                if (!e.is_zero()) return false;
        return true;
    }

    void validate() const {
        if (dim < 1 || dim > 2) throw ValidationError("sde: dim must be 1 or 2");
        if (static_cast<int>(drift.size()) != dim)
            throw ValidationError("sde: drift needs one expression per component");
        if (static_cast<int>(diffusion.size()) != dim)
            throw ValidationError("sde: diffusion must be a dim x dim matrix");
        for (const auto& row : diffusion)
            if (static_cast<int>(row.size()) != dim)
                throw ValidationError("sde: diffusion must be a dim x dim matrix");
        if (levy) {
            levy->validate();
            if (levy->dim != dim) throw ValidationError("sde: levy dim must match sde dim");
        }
        if (!(t_star > 0.0)) throw ValidationError("sde: t_star must be positive");
        const double h = step_size();
        if (!(h > 0.0) || h > t_star) throw ValidationError("sde: need 0 < dt <= t_star");
        const double n = t_star / h;
        if (std::abs(n - std::llround(n)) > 1e-9 * n || std::llround(n) < 1)
            throw ValidationError("sde: t_star/dt must be a positive integer");
    }

    // Canonical serialization; the digest of this string identifies the spec.
    std::string canonical_string() const {
        std::string s = "dim=" + std::to_string(dim) + ";t_star=" + fmt(t_star) +
                        ";dt=" + fmt(step_size()) + ";drift=";
        for (const auto& e : drift) s += e.source() + "|";
        s += ";diffusion=";
        for (const auto& row : diffusion)
            for (const auto& e : row) s += e.source() + "|";
        if (levy)
            s += ";levy=" + fmt(levy->alpha) + "," + fmt(levy->sigma);
        else
            s += ";levy=none";
        return s;
    }

    std::string digest() const { return digest_hex(canonical_string()); }

  private:
    static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
};

struct Burst {
    Point z{};
    std::vector<Point> samples;
};

struct BurstDataset {
    int dim = 1;
    double t_star = 0.0;
    std::uint64_t seed = 0;
    std::string spec_digest;
    std::vector<Burst> bursts;

    std::size_t n_samples() const { return bursts.empty() ? 0 : bursts.front().samples.size(); }
};

namespace detail {

inline void eval_fields(const SdeSpec& spec, const Point& x, double* b, double* lambda) {
    const std::span<const double> vars(x.data(), static_cast<std::size_t>(spec.dim));
    for (int i = 0; i < spec.dim; ++i) b[i] = spec.drift[static_cast<std::size_t>(i)].eval(vars);
    if (lambda) {
        for (int i = 0; i < spec.dim; ++i)
            for (int j = 0; j < spec.dim; ++j)
                lambda[i * spec.dim + j] =
                    spec.diffusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(vars);
    }
}

}  // namespace detail

// n_samples independent endpoint realizations of x(t*) with x(0) = z.
inline Burst euler_maruyama_burst(const SdeSpec& spec, const Point& z, std::size_t n_samples,
                                  Rng& rng) {
    spec.validate();
    if (n_samples < 1) throw ValidationError("sde: n_samples must be >= 1");

    const double h = spec.step_size();
    const std::size_t steps = spec.step_count();
    const double sqrt_h = std::sqrt(h);
    const bool has_brownian = !spec.diffusion_is_zero();
    const bool has_levy = spec.levy.has_value();
    const double levy_scale = has_levy ? spec.levy->sigma * std::pow(h, 1.0 / spec.levy->alpha) : 0.0;

    Burst burst;
    burst.z = z;
    burst.samples.resize(n_samples);

    double b[2], lambda[4], eta[2];
    for (std::size_t s = 0; s < n_samples; ++s) {
        Point x = z;
        for (std::size_t k = 0; k < steps; ++k) {
            detail::eval_fields(spec, x, b, has_brownian ? lambda : nullptr);
            Point next = x;
            for (int i = 0; i < spec.dim; ++i) next[i] += b[i] * h;
            if (has_brownian) {
                double xi[2];
                for (int i = 0; i < spec.dim; ++i) xi[i] = rng.gaussian();
                for (int i = 0; i < spec.dim; ++i) {
                    double inc = 0.0;
                    for (int j = 0; j < spec.dim; ++j) inc += lambda[i * spec.dim + j] * xi[j];
                    next[i] += sqrt_h * inc;
                }
            }
            if (has_levy) {
                sample_isotropic_stable_into(*spec.levy, eta, rng);
                for (int i = 0; i < spec.dim; ++i) next[i] += levy_scale * eta[i];
            }
            for (int i = 0; i < spec.dim; ++i) {
                if (!std::isfinite(next[i]))
                    throw IntegrationError("sde: non-finite state during burst", k);
            }
            x = next;
        }
        burst.samples[s] = x;
    }
    return burst;
}

// Burst for grid index `i`, on its own substream of `seed`. Pulled out of
// generate_dataset so concurrent callers produce bit-identical bursts.
inline Burst dataset_burst(const SdeSpec& spec, const Point& z, std::size_t n_samples,
                           std::uint64_t seed, std::size_t index) {
    Rng sub = Rng(seed).substream(0x5eed, index);
    try {
        return euler_maruyama_burst(spec, z, n_samples, sub);
    } catch (const IntegrationError& e) {
        throw IntegrationError("burst at z=(" + std::to_string(z[0]) +
                                   (spec.dim == 2 ? "," + std::to_string(z[1]) : "") +
                                   "): " + e.what(),
                               e.step_index);
    }
}

// One burst per grid point; per-burst substreams make the result
// deterministic given (spec, z_grid, n_samples, seed).
inline BurstDataset generate_dataset(const SdeSpec& spec, const std::vector<Point>& z_grid,
                                     std::size_t n_samples, std::uint64_t seed) {
    spec.validate();
    if (z_grid.empty()) throw ValidationError("sde: z_grid must be non-empty");

    BurstDataset ds;
    ds.dim = spec.dim;
    ds.t_star = spec.t_star;
    ds.seed = seed;
    ds.spec_digest = spec.digest();
    ds.bursts.resize(z_grid.size());
    for (std::size_t i = 0; i < z_grid.size(); ++i)
        ds.bursts[i] = dataset_burst(spec, z_grid[i], n_samples, seed, i);
    return ds;
}

}  // namespace levyflow
