// Nonlocal Kramers-Moyal extraction. Annulus escape rates read off the jump
// parameters (alpha, sigma); ball moments of the learned density give drift
// and, after subtracting the small-jump second moment, the diffusion matrix.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "levyflow/errors.hpp"
#include "levyflow/flow.hpp"
#include "levyflow/quadrature.hpp"
#include "levyflow/rng.hpp"
#include "levyflow/sde.hpp"

namespace levyflow {

// Surface area of the unit sphere S^{n-1}: 2 points for n=1, circle 2*pi for n=2.
inline double sphere_surface(int n) {
    if (n == 1) return 2.0;
    if (n == 2) return 2.0 * M_PI;
    throw ValidationError("sphere_surface: dim must be 1 or 2");
}

// Normalizing constant of the isotropic alpha-stable jump measure
// c(n, alpha) = alpha * Gamma((n+alpha)/2) / (2^{1-alpha} * pi^{n/2} * Gamma(1-alpha/2)).
inline double stable_constant(int n, double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw ValidationError("stable_constant: alpha must be in (0,2)");
    if (n != 1 && n != 2) throw ValidationError("stable_constant: dim must be 1 or 2");
    return alpha * std::tgamma(0.5 * (n + alpha)) /
           (std::pow(2.0, 1.0 - alpha) * std::pow(M_PI, 0.5 * n) * std::tgamma(1.0 - 0.5 * alpha));
}

// Jump-measure mass of the annulus eps < |y| < m*eps, scaled by sigma^alpha.
inline double theoretical_annulus_rate(double alpha, double sigma, int n, double eps, double m) {
    if (!(eps > 0.0) || !(m > 1.0)) throw ValidationError("annulus rate: need eps > 0 and m > 1");
    const double c = stable_constant(n, alpha);
    return std::pow(sigma, alpha) * c * sphere_surface(n) *
           (std::pow(eps, -alpha) - std::pow(m * eps, -alpha)) / alpha;
}

// Second moment of jumps smaller than eps (diagonal entry of the correction
// subtracted from the observed ball second moment).
inline double jump_correction(double alpha, double sigma, int n, double eps) {
    if (!(eps > 0.0)) throw ValidationError("jump_correction: eps must be positive");
    const double c = stable_constant(n, alpha);
    return std::pow(sigma, alpha) * c * sphere_surface(n) * std::pow(eps, 2.0 - alpha) /
           (n * (2.0 - alpha));
}

inline std::size_t count_in_annulus(const std::vector<Point>& samples, const Point& z, int dim,
                                    double eps, double m) {
    std::size_t c = 0;
    for (const auto& p : samples) {
        const Point d{p[0] - z[0], p[1] - z[1]};
        const double r = norm(d, dim);
        if (r > eps && r < m * eps) ++c;
    }
    return c;
}

struct JumpFit {
    double alpha = 0.0;
    double sigma = 0.0;
    double intercept = 0.0;          // of the weighted log-log fit
    std::vector<double> eps;         // annulus inner radii
    std::vector<double> rates;       // pooled empirical rates per eps
    std::vector<std::size_t> counts; // pooled annulus counts per eps
};

// Weighted least squares of log(rate) against log(eps), weights equal to the
// pooled counts. The model rate is A(alpha, sigma) * eps^{-alpha}, so the
// slope gives alpha directly and the intercept then pins sigma.
inline JumpFit fit_jump_params(const std::vector<double>& eps,
                               const std::vector<std::size_t>& counts, std::size_t n_draws,
                               double t_star, double m, int dim) {
    if (eps.size() < 2) throw ValidationError("jump fit: need at least two radii");
    if (counts.size() != eps.size()) throw ValidationError("jump fit: eps/count size mismatch");
    if (n_draws == 0 || !(t_star > 0.0)) throw ValidationError("jump fit: bad draw count or t_star");
    if (!(m > 1.0)) throw ValidationError("jump fit: m must exceed 1");
    for (std::size_t j = 0; j + 1 < eps.size(); ++j)
        if (!(eps[j] < eps[j + 1])) throw ValidationError("jump fit: radii must increase");

    JumpFit fit;
    fit.eps = eps;
    fit.counts = counts;
    fit.rates.resize(eps.size());
    for (std::size_t j = 0; j < eps.size(); ++j) {
        if (counts[j] == 0)
            throw EstimationError("jump fit: empty annulus at eps=" + std::to_string(eps[j]));
        fit.rates[j] = static_cast<double>(counts[j]) / (static_cast<double>(n_draws) * t_star);
    }
    for (std::size_t j = 0; j + 1 < fit.rates.size(); ++j)
        if (!(fit.rates[j] > fit.rates[j + 1]))
            throw EstimationError("jump fit: annulus rates do not decrease with radius");

    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < eps.size(); ++j) {
        const double w = static_cast<double>(counts[j]);
        const double x = std::log(eps[j]);
        const double y = std::log(fit.rates[j]);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    const double det = sw * sxx - sx * sx;
    if (!(std::abs(det) > 0.0)) throw EstimationError("jump fit: degenerate design");
    const double slope = (sw * sxy - sx * sy) / det;
    fit.intercept = (sxx * sy - sx * sxy) / det;
    fit.alpha = -slope;
    if (!(fit.alpha > 0.0 && fit.alpha < 2.0))
        throw EstimationError("jump fit: alpha estimate outside (0, 2)");
    const double g = std::log(stable_constant(dim, fit.alpha) * sphere_surface(dim) *
                              (1.0 - std::pow(m, -fit.alpha)) / fit.alpha);
    fit.sigma = std::exp((fit.intercept - g) / fit.alpha);
    if (!std::isfinite(fit.sigma) || !(fit.sigma > 0.0))
        throw EstimationError("jump fit: bad sigma estimate");
    return fit;
}

struct BallMoments {
    double mass = 0.0;                 // integral of the density over the ball
    std::array<double, 2> m1{};        // first moments of (x - z)
    std::array<double, 4> m2{};        // second moments, row major
};

inline BallMoments ball_moments(const FlowModel& model, const Point& z, const BallGrid& grid) {
    const auto& nodes = grid.nodes();
    const auto& w = grid.weights();
    std::vector<Point> pts(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k)
        pts[k] = {z[0] + nodes[k][0], z[1] + nodes[k][1]};
    const std::vector<double> logp = flow_log_density_batch(model, pts);
    BallMoments mo;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double p = std::exp(logp[k]) * w[k];
        mo.mass += p;
        mo.m1[0] += p * nodes[k][0];
        mo.m1[1] += p * nodes[k][1];
        mo.m2[0] += p * nodes[k][0] * nodes[k][0];
        mo.m2[1] += p * nodes[k][0] * nodes[k][1];
        mo.m2[3] += p * nodes[k][1] * nodes[k][1];
    }
    mo.m2[2] = mo.m2[1];
    return mo;
}

inline std::array<double, 2> estimate_drift(const FlowModel& model, const Point& z,
                                            const BallGrid& grid, double t_star) {
    if (!(t_star > 0.0)) throw ValidationError("estimate_drift: t_star must be positive");
    const BallMoments mo = ball_moments(model, z, grid);
    return {mo.m1[0] / t_star, mo.m1[1] / t_star};
}

// Diffusion matrix a = Lambda Lambda^T. Pass alpha <= 0 to skip the jump
// correction (pure Brownian runs).
inline std::array<double, 4> estimate_diffusion(const FlowModel& model, const Point& z,
                                                const BallGrid& grid, double t_star, double alpha,
                                                double sigma) {
    if (!(t_star > 0.0)) throw ValidationError("estimate_diffusion: t_star must be positive");
    const BallMoments mo = ball_moments(model, z, grid);
    std::array<double, 4> a{};
    for (int i = 0; i < 4; ++i) a[static_cast<std::size_t>(i)] = mo.m2[static_cast<std::size_t>(i)] / t_star;
    if (alpha > 0.0) {
        const double corr = jump_correction(alpha, sigma, grid.dim(), grid.eps());
        a[0] -= corr;
        if (grid.dim() == 2) a[3] -= corr;
    }
    return a;
}

struct ExtractConfig {
    double ball_eps = 0.5;
    std::vector<double> jump_eps{0.3, 0.5, 0.8, 1.2};
    double jump_m = 2.0;
    int quad_points_1d = 201;
    int quad_points_2d = 129;
    bool estimate_jumps = true;
    std::string jump_source = "resampled";  // "resampled" draws from the flow, "raw" uses the burst
    std::size_t resample_n = 0;             // 0 -> match the burst size
    std::uint64_t seed = 0;

    void validate(int dim) const {
        if (!(ball_eps > 0.0)) throw ValidationError("extract: ball_eps must be positive");
        if (!(jump_m > 1.0)) throw ValidationError("extract: jump_m must exceed 1");
        if (estimate_jumps && jump_eps.size() < 2)
            throw ValidationError("extract: need at least two jump radii");
        for (std::size_t j = 0; j + 1 < jump_eps.size(); ++j)
            if (!(jump_eps[j] < jump_eps[j + 1]))
                throw ValidationError("extract: jump radii must increase");
        if (!jump_eps.empty() && !(jump_eps.front() > 0.0))
            throw ValidationError("extract: jump radii must be positive");
        if (jump_source != "resampled" && jump_source != "raw")
            throw ValidationError("extract: jump_source must be 'resampled' or 'raw'");
        const int q = dim == 1 ? quad_points_1d : quad_points_2d;
        if (q < 33) throw ValidationError("extract: too few quadrature points");
    }
};

struct ZEstimate {
    Point z{};
    double ball_mass = 0.0;
    std::array<double, 2> drift{};
    std::array<double, 4> diffusion{};
};

struct ExtractResult {
    int dim = 1;
    double t_star = 0.0;
    bool jumps_estimated = false;
    JumpFit jump;
    std::vector<ZEstimate> estimates;
};

// Full extraction over a dataset with one trained flow per burst.
inline ExtractResult extract(const BurstDataset& ds, const std::vector<FlowModel>& flows,
                             const ExtractConfig& cfg) {
    if (flows.size() != ds.bursts.size())
        throw ValidationError("extract: one flow per burst required");
    cfg.validate(ds.dim);
    ExtractResult res;
    res.dim = ds.dim;
    res.t_star = ds.t_star;

    if (cfg.estimate_jumps) {
        std::vector<std::size_t> counts(cfg.jump_eps.size(), 0);
        std::size_t n_draws = 0;
        for (std::size_t bi = 0; bi < ds.bursts.size(); ++bi) {
            const Burst& burst = ds.bursts[bi];
            const std::vector<Point>* src = &burst.samples;
            std::vector<Point> resampled;
            if (cfg.jump_source == "resampled") {
                const std::size_t n = cfg.resample_n ? cfg.resample_n : burst.samples.size();
                Rng rng = Rng(cfg.seed).substream(0xa151, static_cast<std::uint64_t>(bi));
                resampled = flow_sample(flows[bi], n, rng);
                src = &resampled;
            }
            n_draws += src->size();
            for (std::size_t j = 0; j < cfg.jump_eps.size(); ++j)
                counts[j] += count_in_annulus(*src, burst.z, ds.dim, cfg.jump_eps[j], cfg.jump_m);
        }
        res.jump = fit_jump_params(cfg.jump_eps, counts, n_draws, ds.t_star, cfg.jump_m, ds.dim);
        res.jumps_estimated = true;
    }

    const int q = ds.dim == 1 ? cfg.quad_points_1d : cfg.quad_points_2d;
    BallGrid grid(ds.dim, cfg.ball_eps, q);
    const double alpha = res.jumps_estimated ? res.jump.alpha : 0.0;
    const double sigma = res.jumps_estimated ? res.jump.sigma : 0.0;
    res.estimates.reserve(ds.bursts.size());
    for (std::size_t bi = 0; bi < ds.bursts.size(); ++bi) {
        ZEstimate ze;
        ze.z = ds.bursts[bi].z;
        const BallMoments mo = ball_moments(flows[bi], ze.z, grid);
        ze.ball_mass = mo.mass;
        ze.drift = {mo.m1[0] / ds.t_star, mo.m1[1] / ds.t_star};
        for (int i = 0; i < 4; ++i)
            ze.diffusion[static_cast<std::size_t>(i)] = mo.m2[static_cast<std::size_t>(i)] / ds.t_star;
        if (res.jumps_estimated) {
            const double corr = jump_correction(alpha, sigma, ds.dim, cfg.ball_eps);
            ze.diffusion[0] -= corr;
            if (ds.dim == 2) ze.diffusion[3] -= corr;
        }
        res.estimates.push_back(ze);
    }
    return res;
}

}  // namespace levyflow
