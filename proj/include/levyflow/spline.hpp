// Monotone rational-quadratic splines on [-B, B] with identity tails.
// Bin widths/heights come from a min-clamped softmax, knot derivatives from
// a shifted softplus, so a zero raw vector gives exactly the identity map.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "levyflow/dual.hpp"
#include "levyflow/errors.hpp"

namespace levyflow {

inline constexpr double kSplineMinBin = 1e-3;
// softplus(c0) == 1, so zero raw derivatives give unit slope at every knot.
inline constexpr double kSplineDerivShift = 0.5413248546129181;  // log(e - 1)

struct RqSpline {
    double B = 3.0;
    std::vector<double> x, y, d;  // knots and derivatives, size K+1
    // Saved activations for the raw-parameter chain rule.
    std::vector<double> pw, ph;  // softmax probabilities, size K
    std::vector<double> ds;      // sigmoid factors at interior knots, size K-1

    int bins() const { return static_cast<int>(x.size()) - 1; }

    void validate() const {
        const std::size_t n = x.size();
        if (n < 2 || y.size() != n || d.size() != n)
            throw ValidationError("spline: inconsistent knot arrays");
        if (!(B > 0.0)) throw ValidationError("spline: bound must be positive");
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (!(x[i] < x[i + 1]) || !(y[i] < y[i + 1]))
                throw ValidationError("spline: knots must be strictly increasing");
        }
        for (double v : d)
            if (!(v > 0.0)) throw ValidationError("spline: knot derivatives must be positive");
    }
};

// raw layout: K width logits, K height logits, K-1 interior derivative values.
inline int spline_raw_size(int K) { return 3 * K - 1; }

inline RqSpline spline_from_raw(const double* raw, int K, double B) {
    if (K < 2) throw ValidationError("spline: need at least 2 bins");
    RqSpline sp;
    sp.B = B;
    sp.x.resize(static_cast<std::size_t>(K) + 1);
    sp.y.resize(static_cast<std::size_t>(K) + 1);
    sp.d.assign(static_cast<std::size_t>(K) + 1, 1.0);
    sp.pw.resize(static_cast<std::size_t>(K));
    sp.ph.resize(static_cast<std::size_t>(K));
    sp.ds.resize(static_cast<std::size_t>(K) - 1);

    auto softmax = [K](const double* r, std::vector<double>& p) {
        double m = r[0];
        for (int i = 1; i < K; ++i) m = std::max(m, r[i]);
        double s = 0.0;
        for (int i = 0; i < K; ++i) {
            p[static_cast<std::size_t>(i)] = std::exp(r[i] - m);
            s += p[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < K; ++i) p[static_cast<std::size_t>(i)] /= s;
    };
    softmax(raw, sp.pw);
    softmax(raw + K, sp.ph);

    const double span = 2.0 * B;
    const double scale = 1.0 - K * kSplineMinBin;
    sp.x[0] = -B;
    sp.y[0] = -B;
    for (int i = 0; i < K; ++i) {
        const double w = span * (kSplineMinBin + scale * sp.pw[static_cast<std::size_t>(i)]);
        const double h = span * (kSplineMinBin + scale * sp.ph[static_cast<std::size_t>(i)]);
        sp.x[static_cast<std::size_t>(i) + 1] = sp.x[static_cast<std::size_t>(i)] + w;
        sp.y[static_cast<std::size_t>(i) + 1] = sp.y[static_cast<std::size_t>(i)] + h;
    }
    for (int j = 0; j < K - 1; ++j) {
        const double r = raw[2 * K + j] + kSplineDerivShift;
        // softplus with overflow guard
        const double sp_v = r > 30.0 ? r : std::log1p(std::exp(r));
        sp.d[static_cast<std::size_t>(j) + 1] = sp_v;
        sp.ds[static_cast<std::size_t>(j)] = 1.0 / (1.0 + std::exp(-r));
    }
    return sp;
}

inline RqSpline spline_identity(int K, double B) {
    std::vector<double> raw(static_cast<std::size_t>(spline_raw_size(K)), 0.0);
    return spline_from_raw(raw.data(), K, B);
}

// Core bin map, written once for double and Dual arguments. Computes the
// transformed value and log of the derivative.
template <typename T>
inline void rq_bin_eval(const T& u, const T& xk, const T& wk, const T& yk, const T& hk,
                        const T& d0, const T& d1, T& out_y, T& out_logdet) {
    T xi = (u - xk) / wk;
    T s = hk / wk;
    T omx = 1.0 - xi;
    T q = xi * omx;
    T denom = s + (d0 + d1 - 2.0 * s) * q;
    out_y = yk + hk * (s * xi * xi + d0 * q) / denom;
    T num = s * s * (d1 * xi * xi + 2.0 * s * q + d0 * omx * omx);
    out_logdet = log(num) - 2.0 * log(denom);
}

inline int spline_find_bin(const std::vector<double>& knots, double v) {
    const int K = static_cast<int>(knots.size()) - 1;
    int k = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), v) - knots.begin()) - 1;
    return std::clamp(k, 0, K - 1);
}

struct SplineValue {
    double value = 0.0;
    double logdet = 0.0;  // log|d out / d in| of the map actually applied
};

inline SplineValue spline_forward(const RqSpline& sp, double u) {
    if (u <= -sp.B || u >= sp.B) return {u, 0.0};
    const int k = spline_find_bin(sp.x, u);
    const std::size_t i = static_cast<std::size_t>(k);
    double y, ld;
    rq_bin_eval(u, sp.x[i], sp.x[i + 1] - sp.x[i], sp.y[i], sp.y[i + 1] - sp.y[i], sp.d[i],
                sp.d[i + 1], y, ld);
    return {y, ld};
}

inline SplineValue spline_inverse(const RqSpline& sp, double v) {
    if (v <= -sp.B || v >= sp.B) return {v, 0.0};
    const int k = spline_find_bin(sp.y, v);
    const std::size_t i = static_cast<std::size_t>(k);
    const double w = sp.x[i + 1] - sp.x[i];
    const double h = sp.y[i + 1] - sp.y[i];
    const double s = h / w;
    const double d0 = sp.d[i], d1 = sp.d[i + 1];
    const double t = v - sp.y[i];
    const double D = d0 + d1 - 2.0 * s;
    const double a = h * (s - d0) + t * D;
    const double b = h * d0 - t * D;
    const double c = -s * t;
    const double disc = std::max(b * b - 4.0 * a * c, 0.0);
    // stable quadratic root in [0, 1]; also exact when a == 0
    const double xi = 2.0 * c / (-b - std::sqrt(disc));
    const double u = sp.x[i] + xi * w;
    const double omx = 1.0 - xi;
    const double q = xi * omx;
    const double denom = s + D * q;
    const double num = s * s * (d1 * xi * xi + 2.0 * s * q + d0 * omx * omx);
    return {u, -(std::log(num) - 2.0 * std::log(denom))};
}

// Forward evaluation plus partial derivatives of (value, logdet) with respect
// to [u, x_k, w_k, y_k, h_k, d_k, d_{k+1}] via one dual-number pass.
struct SplineEvalGrad {
    double value = 0.0;
    double logdet = 0.0;
    int bin = -1;  // -1 marks the identity tail (all partials zero except du)
    std::array<double, 7> dv{};
    std::array<double, 7> dld{};
};

inline SplineEvalGrad spline_forward_with_grad(const RqSpline& sp, double u) {
    SplineEvalGrad g;
    if (u <= -sp.B || u >= sp.B) {
        g.value = u;
        g.dv[0] = 1.0;
        return g;
    }
    const int k = spline_find_bin(sp.x, u);
    const std::size_t i = static_cast<std::size_t>(k);
    using D7 = Dual<7>;
    D7 du = D7::seed(u, 0);
    D7 dx = D7::seed(sp.x[i], 1);
    D7 dw = D7::seed(sp.x[i + 1] - sp.x[i], 2);
    D7 dy = D7::seed(sp.y[i], 3);
    D7 dh = D7::seed(sp.y[i + 1] - sp.y[i], 4);
    D7 dd0 = D7::seed(sp.d[i], 5);
    D7 dd1 = D7::seed(sp.d[i + 1], 6);
    D7 out_y, out_ld;
    rq_bin_eval(du, dx, dw, dy, dh, dd0, dd1, out_y, out_ld);
    g.value = out_y.v;
    g.logdet = out_ld.v;
    g.bin = k;
    g.dv = out_y.d;
    g.dld = out_ld.d;
    return g;
}

// Accumulator for knot-level cotangents of one spline layer.
struct SplineKnotGrad {
    std::vector<double> gx, gy, gd;  // size K+1
    std::vector<double> gw, gh;      // size K

    explicit SplineKnotGrad(int K)
        : gx(static_cast<std::size_t>(K) + 1, 0.0),
          gy(static_cast<std::size_t>(K) + 1, 0.0),
          gd(static_cast<std::size_t>(K) + 1, 0.0),
          gw(static_cast<std::size_t>(K), 0.0),
          gh(static_cast<std::size_t>(K), 0.0) {}

    void zero() {
        std::fill(gx.begin(), gx.end(), 0.0);
        std::fill(gy.begin(), gy.end(), 0.0);
        std::fill(gd.begin(), gd.end(), 0.0);
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gh.begin(), gh.end(), 0.0);
    }

    // Scatter one point's partials. gv/gld are cotangents of value/logdet.
    void accumulate(const SplineEvalGrad& g, double gv, double gld) {
        if (g.bin < 0) return;
        const std::size_t k = static_cast<std::size_t>(g.bin);
        gx[k] += gv * g.dv[1] + gld * g.dld[1];
        gw[k] += gv * g.dv[2] + gld * g.dld[2];
        gy[k] += gv * g.dv[3] + gld * g.dld[3];
        gh[k] += gv * g.dv[4] + gld * g.dld[4];
        gd[k] += gv * g.dv[5] + gld * g.dld[5];
        gd[k + 1] += gv * g.dv[6] + gld * g.dld[6];
    }
};

// Chain knot cotangents back to the raw parameter vector (3K-1 entries,
// accumulated into raw_grad). Uses the softmax/softplus activations stored on
// the spline. Left knot positions are cumulative sums of widths, so a knot
// cotangent spreads to every width before it; same for heights.
inline void spline_raw_backward(const RqSpline& sp, const SplineKnotGrad& kg, double* raw_grad) {
    const int K = sp.bins();
    const double span = 2.0 * sp.B;
    const double scale = 1.0 - K * kSplineMinBin;

    std::vector<double> Gw(static_cast<std::size_t>(K)), Gh(static_cast<std::size_t>(K));
    double suffix = 0.0;
    for (int j = K - 1; j >= 0; --j) {
        suffix += kg.gx[static_cast<std::size_t>(j) + 1];
        Gw[static_cast<std::size_t>(j)] = kg.gw[static_cast<std::size_t>(j)] + suffix;
    }
    suffix = 0.0;
    for (int j = K - 1; j >= 0; --j) {
        suffix += kg.gy[static_cast<std::size_t>(j) + 1];
        Gh[static_cast<std::size_t>(j)] = kg.gh[static_cast<std::size_t>(j)] + suffix;
    }

    auto softmax_back = [&](const std::vector<double>& p, const std::vector<double>& G,
                            double* out) {
        double dot = 0.0;
        for (int i = 0; i < K; ++i) dot += p[static_cast<std::size_t>(i)] * G[static_cast<std::size_t>(i)];
        for (int i = 0; i < K; ++i)
            out[i] += span * scale * p[static_cast<std::size_t>(i)] *
                      (G[static_cast<std::size_t>(i)] - dot);
    };
    softmax_back(sp.pw, Gw, raw_grad);
    softmax_back(sp.ph, Gh, raw_grad + K);
    for (int j = 0; j < K - 1; ++j)
        raw_grad[2 * K + j] +=
            kg.gd[static_cast<std::size_t>(j) + 1] * sp.ds[static_cast<std::size_t>(j)];
}

}  // namespace levyflow
