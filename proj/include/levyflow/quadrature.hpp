// Deterministic fixed-grid quadrature: composite Simpson in 1D and a
// tensor-product Simpson rule over the bounding square with a disk mask in
// 2D. Boundary cells of the disk mask get fractional weights computed by
// subsampling, so the masked rule converges for smooth integrands.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "levyflow/errors.hpp"
#include "levyflow/sde.hpp"

namespace levyflow {

// Composite Simpson on [a, b] with n points (n odd, n >= 3).
template <typename F>
double simpson(F&& f, double a, double b, int n) {
    if (n < 3 || n % 2 == 0) throw ValidationError("simpson: need an odd point count >= 3");
    const double h = (b - a) / (n - 1);
    double acc = f(a) + f(b);
    for (int i = 1; i < n - 1; ++i) acc += f(a + h * i) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Precomputed nodes and weights for integrating over the ball ||x - z|| < eps.
// Nodes are stored relative to the center z, so one grid serves every z.
class BallGrid {
  public:
    BallGrid(int dim, double eps, int resolution) : dim_(dim), eps_(eps) {
        if (dim != 1 && dim != 2) throw ValidationError("ball quadrature: dim must be 1 or 2");
        if (!(eps > 0.0)) throw ValidationError("ball quadrature: eps must be positive");
        if (resolution < 33) throw ValidationError("ball quadrature: resolution must be >= 33");
        if (resolution % 2 == 0) ++resolution;

        const int n = resolution;
        const double h = 2.0 * eps / (n - 1);
        std::vector<double> w1(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i)
            w1[static_cast<std::size_t>(i)] =
                (i == 0 || i == n - 1) ? h / 3.0 : (i % 2 == 1 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);

        if (dim == 1) {
            // The 1D ball is exactly the interval [-eps, eps]; pure Simpson.
            nodes_.reserve(static_cast<std::size_t>(n));
            weights_.reserve(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                nodes_.push_back({-eps + h * i, 0.0});
                weights_.push_back(w1[static_cast<std::size_t>(i)]);
            }
            return;
        }

        // 2D: node weight = Simpson weight times the covered fraction of the
        // node's cell (side h). Fully inside -> 1, fully outside -> dropped,
        // boundary cells subsampled.
        constexpr int kSub = 48;
        for (int i = 0; i < n; ++i) {
            const double x = -eps + h * i;
            for (int j = 0; j < n; ++j) {
                const double y = -eps + h * j;
                const double r = std::hypot(x, y);
                const double half_diag = h * 0.7071067811865476;
                double frac;
                if (r + half_diag <= eps) {
                    frac = 1.0;
                } else if (r - half_diag >= eps) {
                    continue;
                } else {
                    int inside = 0;
                    for (int a = 0; a < kSub; ++a) {
                        const double sx = x + h * ((a + 0.5) / kSub - 0.5);
                        for (int c = 0; c < kSub; ++c) {
                            const double sy = y + h * ((c + 0.5) / kSub - 0.5);
                            if (sx * sx + sy * sy < eps * eps) ++inside;
                        }
                    }
                    if (inside == 0) continue;
                    frac = static_cast<double>(inside) / (kSub * kSub);
                }
                nodes_.push_back({x, y});
                weights_.push_back(w1[static_cast<std::size_t>(i)] * w1[static_cast<std::size_t>(j)] * frac);
            }
        }
    }

    int dim() const { return dim_; }
    double eps() const { return eps_; }
    const std::vector<Point>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    // Integral of f over the ball centered at z.
    template <typename F>
    double integrate(F&& f, const Point& z) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            Point x{z[0] + nodes_[k][0], z[1] + nodes_[k][1]};
            acc += weights_[k] * f(x);
        }
        return acc;
    }

  private:
    int dim_;
    double eps_;
    std::vector<Point> nodes_;
    std::vector<double> weights_;
};

// One-off form of the ball rule.
inline double ball_quadrature(const std::function<double(const Point&)>& f, const Point& z, int dim,
                              double eps, int resolution) {
    return BallGrid(dim, eps, resolution).integrate(f, z);
}

}  // namespace levyflow
