// Affine coupling layers for the 2D flow. Each layer keeps one coordinate
// fixed and rescales the other as v_t = (x_t * exp(mu(x_p)) + nu(x_p)) / C,
// so log|det| = mu(x_p) - log C per point.
#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "levyflow/errors.hpp"
#include "levyflow/net.hpp"
#include "levyflow/sde.hpp"

namespace levyflow {

struct CouplingLayer {
    int transformed = 1;  // index of the coordinate this layer changes
    double C = 1.0 / 3.0;
    DenseNet mu, nu;

    int passthrough() const { return 1 - transformed; }

    void validate() const {
        if (transformed != 0 && transformed != 1)
            throw ValidationError("coupling: transformed index must be 0 or 1");
        if (!(C > 0.0)) throw ValidationError("coupling: scale constant must be positive");
    }
};

inline Point coupling_forward(const CouplingLayer& cl, const Point& x, double& logdet) {
    const int t = cl.transformed, p = cl.passthrough();
    Eigen::VectorXd in(1);
    in(0) = x[static_cast<std::size_t>(p)];
    const double m = cl.mu.forward(in)(0);
    const double n = cl.nu.forward(in)(0);
    Point v = x;
    v[static_cast<std::size_t>(t)] = (x[static_cast<std::size_t>(t)] * std::exp(m) + n) / cl.C;
    logdet = m - std::log(cl.C);
    return v;
}

// Inverse map; logdet is log|det| of the inverse itself.
inline Point coupling_inverse(const CouplingLayer& cl, const Point& v, double& logdet) {
    const int t = cl.transformed, p = cl.passthrough();
    Eigen::VectorXd in(1);
    in(0) = v[static_cast<std::size_t>(p)];
    const double m = cl.mu.forward(in)(0);
    const double n = cl.nu.forward(in)(0);
    Point x = v;
    x[static_cast<std::size_t>(t)] = (cl.C * v[static_cast<std::size_t>(t)] - n) * std::exp(-m);
    logdet = std::log(cl.C) - m;
    return x;
}

struct CouplingCache {
    DenseNet::Cache mu_cache, nu_cache;
    Eigen::RowVectorXd em;  // exp(mu) per column
    Eigen::RowVectorXd xt;  // transformed-coordinate inputs
};

// X is 2 x B; logdet picks up mu - log C per column. cache may be null for
// inference-only passes.
inline Eigen::MatrixXd coupling_forward_batch(const CouplingLayer& cl, const Eigen::MatrixXd& X,
                                              Eigen::RowVectorXd& logdet, CouplingCache* cache) {
    const int t = cl.transformed, p = cl.passthrough();
    const Eigen::MatrixXd xp = X.row(p);
    Eigen::RowVectorXd m, n;
    if (cache) {
        m = cl.mu.forward(xp, &cache->mu_cache).row(0);
        n = cl.nu.forward(xp, &cache->nu_cache).row(0);
    } else {
        m = cl.mu.forward(xp).row(0);
        n = cl.nu.forward(xp).row(0);
    }
    const Eigen::RowVectorXd em = m.array().exp();
    if (cache) {
        cache->em = em;
        cache->xt = X.row(t);
    }
    Eigen::MatrixXd V = X;
    V.row(t) = (X.row(t).array() * em.array() + n.array()) / cl.C;
    logdet = m.array() - std::log(cl.C);
    return V;
}

// Accumulates parameter gradients into the nets and returns dL/dX.
// dV are cotangents of the outputs, dLogdet of the per-column logdet.
inline Eigen::MatrixXd coupling_backward_batch(CouplingLayer& cl, const CouplingCache& cache,
                                               const Eigen::MatrixXd& dV,
                                               const Eigen::RowVectorXd& dLogdet) {
    const int t = cl.transformed, p = cl.passthrough();
    const Eigen::ArrayXXd gvt = dV.row(t).array();
    // v_t = (x_t * e^mu + nu)/C
    Eigen::MatrixXd dmu =
        (gvt * cache.xt.array() * cache.em.array() / cl.C + dLogdet.array()).matrix();
    Eigen::MatrixXd dnu = (gvt / cl.C).matrix();
    Eigen::MatrixXd dxp_mu = cl.mu.backward(cache.mu_cache, dmu);
    Eigen::MatrixXd dxp_nu = cl.nu.backward(cache.nu_cache, dnu);
    Eigen::MatrixXd dX(2, dV.cols());
    dX.row(t) = (gvt * cache.em.array() / cl.C).matrix();
    dX.row(p) = dV.row(p) + dxp_mu.row(0) + dxp_nu.row(0);
    return dX;
}

}  // namespace levyflow
