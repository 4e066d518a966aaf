// Maximum-likelihood training of a FlowModel on one burst of samples.
// Everything is deterministic given the config seed: holdout split, batch
// order and initialization all come from named substreams.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "levyflow/errors.hpp"
#include "levyflow/flow.hpp"
#include "levyflow/rng.hpp"

namespace levyflow {

struct TrainConfig {
    int epochs = 300;
    int batch_size = 512;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double holdout_fraction = 0.1;
    double grad_clip = 100.0;   // global-norm clip on the mean gradient; <=0 disables
    double clip_radius = 6.0;   // drop standardized points beyond this radius; <=0 disables
    std::uint64_t seed = 0;

    void validate() const {
        if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
        if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
        if (!(lr > 0.0)) throw ValidationError("train: lr must be positive");
        if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
            throw ValidationError("train: holdout_fraction must be in [0, 1)");
    }
};

struct TrainResult {
    double best_val_nll = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    std::size_t n_train = 0, n_val = 0, n_dropped = 0;
    std::vector<double> train_curve, val_curve;  // mean NLL per epoch
};

class Adam {
  public:
    Adam(std::size_t n, double lr, double b1, double b2, double eps)
        : lr_(lr), b1_(b1), b2_(b2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw ValidationError("adam: size mismatch");
        ++t_;
        const double c1 = 1.0 - std::pow(b1_, t_);
        const double c2 = 1.0 - std::pow(b2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1_ * m_[i] + (1.0 - b1_) * grads[i];
            v_[i] = b2_ * v_[i] + (1.0 - b2_) * grads[i] * grads[i];
            params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
        }
    }

  private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

// Sum of negative log densities; no gradients.
inline double flow_nll(const FlowModel& model, const std::vector<Point>& pts) {
    const std::vector<double> ld = flow_log_density_batch(model, pts);
    double s = 0.0;
    for (double v : ld) s -= v;
    return s;
}

// Sum of negative log densities over the batch, accumulating parameter
// gradients into the model nets (call flow_zero_grad first).
inline double flow_nll_and_grad(FlowModel& model, const std::vector<Point>& batch) {
    const std::size_t B = batch.size();
    if (B == 0) return 0.0;

    if (model.dim == 1) {
        const std::size_t L = model.layers.size();
        const double s0 = model.scale[0];
        std::vector<SplineEvalGrad> evals(B * L);
        std::vector<double> zfin(B);
        double nll = 0.0;
        for (std::size_t i = 0; i < B; ++i) {
            double u = (batch[i][0] - model.shift[0]) / s0;
            double ld = -std::log(s0);
            for (std::size_t l = 0; l < L; ++l) {
                SplineEvalGrad g = spline_forward_with_grad(model.layers[l].spline, u);
                evals[i * L + l] = g;
                u = g.value;
                ld += g.logdet;
            }
            zfin[i] = u;
            nll += 0.5 * u * u + 0.5 * kLogTwoPi - ld;
        }

        std::vector<SplineKnotGrad> kg;
        kg.reserve(L);
        for (std::size_t l = 0; l < L; ++l) kg.emplace_back(model.spline_bins);
        for (std::size_t i = 0; i < B; ++i) {
            double cu = zfin[i];  // d nll_i / d u_L
            for (std::size_t l = L; l-- > 0;) {
                const SplineEvalGrad& g = evals[i * L + l];
                kg[l].accumulate(g, cu, -1.0);
                cu = cu * g.dv[0] - g.dld[0];
            }
        }
        const int raw_n = spline_raw_size(model.spline_bins);
        Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
        std::vector<double> raw_grad(static_cast<std::size_t>(raw_n));
        for (std::size_t l = 0; l < L; ++l) {
            std::fill(raw_grad.begin(), raw_grad.end(), 0.0);
            spline_raw_backward(model.layers[l].spline, kg[l], raw_grad.data());
            DenseNet::Cache cache;
            model.layers[l].net.forward(one, &cache);
            Eigen::MatrixXd dY =
                Eigen::Map<Eigen::MatrixXd>(raw_grad.data(), raw_n, 1);
            model.layers[l].net.backward(cache, dY);
        }
        return nll;
    }

    // dim == 2
    const Eigen::Index n = static_cast<Eigen::Index>(B);
    Eigen::MatrixXd X(2, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(0, i) = (batch[static_cast<std::size_t>(i)][0] - model.shift[0]) / model.scale[0];
        X(1, i) = (batch[static_cast<std::size_t>(i)][1] - model.shift[1]) / model.scale[1];
    }
    const std::size_t L = model.couplings.size();
    std::vector<CouplingCache> caches(L);
    double ld_sum = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::RowVectorXd ld;
        X = coupling_forward_batch(model.couplings[l], X, ld, &caches[l]);
        ld_sum += ld.sum();
    }
    const double const_term =
        kLogTwoPi + std::log(model.scale[0]) + std::log(model.scale[1]);
    double nll = 0.5 * X.squaredNorm() + const_term * static_cast<double>(B) - ld_sum;
    Eigen::MatrixXd dV = X;  // d nll / d v = v per column
    Eigen::RowVectorXd dLd = Eigen::RowVectorXd::Constant(n, -1.0);
    for (std::size_t l = L; l-- > 0;)
        dV = coupling_backward_batch(model.couplings[l], caches[l], dV, dLd);
    return nll;
}

inline TrainResult train_flow(FlowModel& model, const std::vector<Point>& samples,
                              const TrainConfig& cfg) {
    cfg.validate();
    model.validate();
    if (samples.size() < 4) throw TrainError("too few samples to train", 0, 0);

    // Drop extreme standardized points; the flow tails carry no parameters
    // (dim 1) or would be dominated by a handful of huge jumps (dim 2).
    std::vector<Point> data;
    data.reserve(samples.size());
    for (const auto& p : samples) {
        bool keep = true;
        if (cfg.clip_radius > 0.0) {
            for (int j = 0; j < model.dim; ++j) {
                const std::size_t k = static_cast<std::size_t>(j);
                if (std::abs((p[k] - model.shift[k]) / model.scale[k]) > cfg.clip_radius)
                    keep = false;
            }
        }
        if (keep) data.push_back(p);
    }
    TrainResult res;
    res.n_dropped = samples.size() - data.size();
    if (data.size() < 4) throw TrainError("clip radius removed almost all samples", 0, 0);

    Rng split_rng = Rng(cfg.seed).substream(0x51e1d);
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    split_rng.shuffle(idx);
    std::size_t n_val =
        static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(data.size())));
    if (cfg.holdout_fraction > 0.0 && n_val == 0) n_val = 1;
    std::vector<Point> val, train;
    val.reserve(n_val);
    train.reserve(data.size() - n_val);
    for (std::size_t i = 0; i < idx.size(); ++i)
        (i < n_val ? val : train).push_back(data[idx[i]]);
    res.n_train = train.size();
    res.n_val = val.size();
    if (train.empty()) throw TrainError("empty training split", 0, 0);

    const std::size_t P = flow_param_count(model);
    Adam opt(P, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
    std::vector<double> params, grads, best_params;
    flow_copy_params(model, params);
    best_params = params;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<Point> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng = Rng(cfg.seed).substream(0xe90c, static_cast<std::uint64_t>(epoch));
        erng.shuffle(order);
        double epoch_nll = 0.0;
        std::size_t epoch_pts = 0;
        int batch_index = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(train[order[i]]);

            flow_zero_grad(model);
            const double nll_sum = flow_nll_and_grad(model, batch);
            if (!std::isfinite(nll_sum))
                throw TrainError("non-finite training loss", epoch, batch_index);
            const double inv_b = 1.0 / static_cast<double>(batch.size());
            epoch_nll += nll_sum;
            epoch_pts += batch.size();

            flow_copy_grads(model, grads);
            for (double& g : grads) g *= inv_b;
            if (cfg.grad_clip > 0.0) {
                double norm2 = 0.0;
                for (double g : grads) norm2 += g * g;
                const double norm = std::sqrt(norm2);
                if (norm > cfg.grad_clip) {
                    const double f = cfg.grad_clip / norm;
                    for (double& g : grads) g *= f;
                }
            }
            opt.step(params, grads);
            flow_load_params(model, params);
        }
        res.train_curve.push_back(epoch_nll / static_cast<double>(epoch_pts));

        if (!val.empty()) {
            const double val_nll = flow_nll(model, val) / static_cast<double>(val.size());
            if (!std::isfinite(val_nll))
                throw TrainError("non-finite validation loss", epoch, -1);
            res.val_curve.push_back(val_nll);
            if (val_nll < res.best_val_nll) {
                res.best_val_nll = val_nll;
                res.best_epoch = epoch;
                best_params = params;
            }
        } else {
            res.best_epoch = epoch;
            best_params = params;
        }
    }
    flow_load_params(model, best_params);
    if (!val.empty()) {
        // keep the reported value consistent with the restored parameters
        res.best_val_nll = flow_nll(model, val) / static_cast<double>(val.size());
    }
    return res;
}

}  // namespace levyflow
