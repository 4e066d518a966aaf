// Small dense networks (tanh hidden layers, linear output) with explicit
// batched forward/backward passes. Parameters and gradients live side by
// side so optimizers can flatten them into plain vectors.
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "levyflow/errors.hpp"
#include "levyflow/rng.hpp"

namespace levyflow {

struct DenseNet {
    std::vector<int> sizes;  // widths including input and output
    std::vector<Eigen::MatrixXd> W, dW;
    std::vector<Eigen::VectorXd> b, db;

    // Activations kept from a forward pass; h[0] is the input batch.
    struct Cache {
        std::vector<Eigen::MatrixXd> h;
    };

    DenseNet() = default;

    explicit DenseNet(std::vector<int> widths) : sizes(std::move(widths)) {
        if (sizes.size() < 2) throw ValidationError("dense net needs at least two layer widths");
        const std::size_t L = sizes.size() - 1;
        W.resize(L);
        dW.resize(L);
        b.resize(L);
        db.resize(L);
        for (std::size_t l = 0; l < L; ++l) {
            W[l] = Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]);
            dW[l] = Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]);
            b[l] = Eigen::VectorXd::Zero(sizes[l + 1]);
            db[l] = Eigen::VectorXd::Zero(sizes[l + 1]);
        }
    }

    std::size_t layer_count() const { return W.size(); }

    // Xavier-uniform weights, zero biases. Fill order is fixed (column-major
    // per layer) so a given rng stream always yields the same network.
    void init_xavier(Rng& rng) {
        for (std::size_t l = 0; l < W.size(); ++l) {
            const double limit = std::sqrt(6.0 / (W[l].rows() + W[l].cols()));
            double* p = W[l].data();
            for (Eigen::Index k = 0; k < W[l].size(); ++k) p[k] = (2.0 * rng.uniform() - 1.0) * limit;
            b[l].setZero();
        }
    }

    void zero_output_layer() {
        W.back().setZero();
        b.back().setZero();
    }

    void zero_grad() {
        for (auto& g : dW) g.setZero();
        for (auto& g : db) g.setZero();
    }

    // Columns of X are samples.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X, Cache* cache = nullptr) const {
        const std::size_t L = W.size();
        if (cache) {
            cache->h.assign(L + 1, {});
            cache->h[0] = X;
        }
        Eigen::MatrixXd h = X;
        for (std::size_t l = 0; l < L; ++l) {
            Eigen::MatrixXd a = (W[l] * h).colwise() + b[l];
            h = (l + 1 < L) ? a.array().tanh().matrix() : a;
            if (cache) cache->h[l + 1] = h;
        }
        return h;
    }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd out = forward(Eigen::MatrixXd(x));
        return out.col(0);
    }

    // Accumulates into dW/db and returns the gradient wrt the input batch.
    Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& dY) {
        const std::size_t L = W.size();
        Eigen::MatrixXd dh = dY;
        for (std::size_t l = L; l-- > 0;) {
            Eigen::MatrixXd da = (l + 1 < L)
                                     ? (dh.array() * (1.0 - cache.h[l + 1].array().square())).matrix()
                                     : dh;
            dW[l] += da * cache.h[l].transpose();
            db[l] += da.rowwise().sum();
            dh = W[l].transpose() * da;
        }
        return dh;
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < W.size(); ++l)
            n += static_cast<std::size_t>(W[l].size() + b[l].size());
        return n;
    }

    double* copy_params_to(double* out) const {
        for (std::size_t l = 0; l < W.size(); ++l) {
            out = std::copy(W[l].data(), W[l].data() + W[l].size(), out);
            out = std::copy(b[l].data(), b[l].data() + b[l].size(), out);
        }
        return out;
    }

    double* copy_grads_to(double* out) const {
        for (std::size_t l = 0; l < W.size(); ++l) {
            out = std::copy(dW[l].data(), dW[l].data() + dW[l].size(), out);
            out = std::copy(db[l].data(), db[l].data() + db[l].size(), out);
        }
        return out;
    }

    const double* load_params_from(const double* in) {
        for (std::size_t l = 0; l < W.size(); ++l) {
            std::copy(in, in + W[l].size(), W[l].data());
            in += W[l].size();
            std::copy(in, in + b[l].size(), b[l].data());
            in += b[l].size();
        }
        return in;
    }
};

}  // namespace levyflow
