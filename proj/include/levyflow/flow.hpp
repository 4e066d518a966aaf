// Normalizing-flow density model. dim 1 stacks rational-quadratic spline
// layers whose parameters come from constant-input networks; dim 2 stacks
// affine coupling layers. The flow maps data toward a standard Gaussian, and
// densities include the data standardization (shift/scale) applied up front.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <json.hpp>
#include <string>
#include <vector>

#include "levyflow/coupling.hpp"
#include "levyflow/errors.hpp"
#include "levyflow/io.hpp"
#include "levyflow/net.hpp"
#include "levyflow/rng.hpp"
#include "levyflow/sde.hpp"
#include "levyflow/spline.hpp"

namespace levyflow {

inline constexpr double kLogTwoPi = 1.8378770664093453;

struct SplineLayer {
    DenseNet net;      // constant input -> raw spline parameters
    RqSpline spline;   // rebuilt from the net whenever parameters change
};

struct FlowModel {
    int dim = 1;
    int spline_bins = 5;
    double spline_bound = 3.0;
    std::array<double, 2> shift{0.0, 0.0};
    std::array<double, 2> scale{1.0, 1.0};
    std::vector<SplineLayer> layers;        // dim == 1
    std::vector<CouplingLayer> couplings;   // dim == 2

    void validate() const {
        if (dim != 1 && dim != 2) throw ValidationError("flow: dim must be 1 or 2");
        for (int i = 0; i < dim; ++i)
            if (!(scale[static_cast<std::size_t>(i)] > 0.0))
                throw ValidationError("flow: scale must be positive");
        if (dim == 1 && layers.empty()) throw ValidationError("flow: no spline layers");
        if (dim == 2 && couplings.empty()) throw ValidationError("flow: no coupling layers");
        for (const auto& cl : couplings) cl.validate();
    }
};

// Re-derive every spline's knots from its network. Must run after any
// parameter update and after loading a checkpoint.
inline void rebuild_spline_cache(FlowModel& model) {
    if (model.dim != 1) return;
    Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    for (auto& layer : model.layers) {
        Eigen::VectorXd raw = layer.net.forward(one);
        if (raw.size() != spline_raw_size(model.spline_bins))
            throw ValidationError("flow: spline net output size mismatch");
        layer.spline = spline_from_raw(raw.data(), model.spline_bins, model.spline_bound);
    }
}

inline FlowModel make_flow_1d(int n_layers, int bins, double bound,
                              const std::vector<int>& hidden, std::uint64_t seed) {
    if (n_layers < 1) throw ValidationError("flow: need at least one layer");
    FlowModel m;
    m.dim = 1;
    m.spline_bins = bins;
    m.spline_bound = bound;
    m.layers.resize(static_cast<std::size_t>(n_layers));
    for (int i = 0; i < n_layers; ++i) {
        std::vector<int> widths{1};
        widths.insert(widths.end(), hidden.begin(), hidden.end());
        widths.push_back(spline_raw_size(bins));
        auto& layer = m.layers[static_cast<std::size_t>(i)];
        layer.net = DenseNet(widths);
        Rng r = Rng(seed).substream(0x1a7e5, static_cast<std::uint64_t>(i));
        layer.net.init_xavier(r);
        layer.net.zero_output_layer();  // start at the identity map
    }
    rebuild_spline_cache(m);
    return m;
}

inline FlowModel make_flow_2d(int n_couplings, double C, const std::vector<int>& hidden,
                              std::uint64_t seed) {
    if (n_couplings < 1) throw ValidationError("flow: need at least one coupling");
    FlowModel m;
    m.dim = 2;
    m.couplings.resize(static_cast<std::size_t>(n_couplings));
    std::vector<int> widths{1};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(1);
    for (int i = 0; i < n_couplings; ++i) {
        auto& cl = m.couplings[static_cast<std::size_t>(i)];
        // alternate starting from the second coordinate: 1, 0, 1, ...
        cl.transformed = (i % 2 == 0) ? 1 : 0;
        cl.C = C;
        cl.mu = DenseNet(widths);
        cl.nu = DenseNet(widths);
        Rng rm = Rng(seed).substream(0xc09a, static_cast<std::uint64_t>(2 * i));
        Rng rn = Rng(seed).substream(0xc09a, static_cast<std::uint64_t>(2 * i + 1));
        cl.mu.init_xavier(rm);
        cl.nu.init_xavier(rn);
        cl.mu.zero_output_layer();
        cl.nu.zero_output_layer();
    }
    return m;
}

inline double flow_log_density(const FlowModel& model, const Point& x) {
    if (model.dim == 1) {
        double u = (x[0] - model.shift[0]) / model.scale[0];
        double ld = -std::log(model.scale[0]);
        for (const auto& layer : model.layers) {
            SplineValue sv = spline_forward(layer.spline, u);
            u = sv.value;
            ld += sv.logdet;
        }
        return -0.5 * u * u - 0.5 * kLogTwoPi + ld;
    }
    Point u{(x[0] - model.shift[0]) / model.scale[0], (x[1] - model.shift[1]) / model.scale[1]};
    double ld = -std::log(model.scale[0]) - std::log(model.scale[1]);
    for (const auto& cl : model.couplings) {
        double l = 0.0;
        u = coupling_forward(cl, u, l);
        ld += l;
    }
    return -0.5 * (u[0] * u[0] + u[1] * u[1]) - kLogTwoPi + ld;
}

// Batched form; for dim 2 it shares one network pass per coupling across all
// points, which matters for the quadrature grids.
inline std::vector<double> flow_log_density_batch(const FlowModel& model,
                                                  const std::vector<Point>& pts) {
    std::vector<double> out(pts.size());
    if (model.dim == 1) {
        for (std::size_t i = 0; i < pts.size(); ++i) out[i] = flow_log_density(model, pts[i]);
        return out;
    }
    const Eigen::Index B = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd X(2, B);
    for (Eigen::Index i = 0; i < B; ++i) {
        X(0, i) = (pts[static_cast<std::size_t>(i)][0] - model.shift[0]) / model.scale[0];
        X(1, i) = (pts[static_cast<std::size_t>(i)][1] - model.shift[1]) / model.scale[1];
    }
    Eigen::RowVectorXd ld_total = Eigen::RowVectorXd::Constant(
        B, -std::log(model.scale[0]) - std::log(model.scale[1]));
    for (const auto& cl : model.couplings) {
        Eigen::RowVectorXd ld;
        X = coupling_forward_batch(cl, X, ld, nullptr);
        ld_total += ld;
    }
    for (Eigen::Index i = 0; i < B; ++i) {
        out[static_cast<std::size_t>(i)] =
            -0.5 * (X(0, i) * X(0, i) + X(1, i) * X(1, i)) - kLogTwoPi + ld_total(i);
    }
    return out;
}

inline Point flow_sample_one(const FlowModel& model, Rng& rng) {
    if (model.dim == 1) {
        double u = rng.gaussian();
        for (auto it = model.layers.rbegin(); it != model.layers.rend(); ++it)
            u = spline_inverse(it->spline, u).value;
        return {u * model.scale[0] + model.shift[0], 0.0};
    }
    Point u{rng.gaussian(), rng.gaussian()};
    for (auto it = model.couplings.rbegin(); it != model.couplings.rend(); ++it) {
        double l = 0.0;
        u = coupling_inverse(*it, u, l);
    }
    return {u[0] * model.scale[0] + model.shift[0], u[1] * model.scale[1] + model.shift[1]};
}

inline std::vector<Point> flow_sample(const FlowModel& model, std::size_t n, Rng& rng) {
    std::vector<Point> out(n);
    for (auto& p : out) p = flow_sample_one(model, rng);
    return out;
}

// ---- parameter flattening (optimizer interface) ----

inline std::size_t flow_param_count(const FlowModel& model) {
    std::size_t n = 0;
    for (const auto& l : model.layers) n += l.net.param_count();
    for (const auto& c : model.couplings) n += c.mu.param_count() + c.nu.param_count();
    return n;
}

inline void flow_copy_params(const FlowModel& model, std::vector<double>& out) {
    out.resize(flow_param_count(model));
    double* p = out.data();
    for (const auto& l : model.layers) p = l.net.copy_params_to(p);
    for (const auto& c : model.couplings) {
        p = c.mu.copy_params_to(p);
        p = c.nu.copy_params_to(p);
    }
}

inline void flow_copy_grads(const FlowModel& model, std::vector<double>& out) {
    out.resize(flow_param_count(model));
    double* p = out.data();
    for (const auto& l : model.layers) p = l.net.copy_grads_to(p);
    for (const auto& c : model.couplings) {
        p = c.mu.copy_grads_to(p);
        p = c.nu.copy_grads_to(p);
    }
}

inline void flow_load_params(FlowModel& model, const std::vector<double>& in) {
    if (in.size() != flow_param_count(model))
        throw ValidationError("flow: parameter vector size mismatch");
    const double* p = in.data();
    for (auto& l : model.layers) p = l.net.load_params_from(p);
    for (auto& c : model.couplings) {
        p = c.mu.load_params_from(p);
        p = c.nu.load_params_from(p);
    }
    rebuild_spline_cache(model);
}

inline void flow_zero_grad(FlowModel& model) {
    for (auto& l : model.layers) l.net.zero_grad();
    for (auto& c : model.couplings) {
        c.mu.zero_grad();
        c.nu.zero_grad();
    }
}

// ---- checkpoint io ----

inline nlohmann::ordered_json net_to_json(const DenseNet& net) {
    std::vector<double> flat(net.param_count());
    net.copy_params_to(flat.data());
    nlohmann::ordered_json j;
    j["widths"] = net.sizes;
    j["params"] = flat;
    return j;
}

inline DenseNet net_from_json(const nlohmann::json& j) {
    DenseNet net(j.at("widths").get<std::vector<int>>());
    std::vector<double> flat = j.at("params").get<std::vector<double>>();
    if (flat.size() != net.param_count()) throw IoError("checkpoint: net parameter count mismatch");
    net.load_params_from(flat.data());
    return net;
}

inline void save_flow(const FlowModel& model, const fs::path& path) {
    nlohmann::ordered_json j;
    j["format"] = "levyflow-checkpoint";
    j["version"] = 1;
    j["dim"] = model.dim;
    j["shift"] = std::vector<double>(model.shift.begin(), model.shift.begin() + model.dim);
    j["scale"] = std::vector<double>(model.scale.begin(), model.scale.begin() + model.dim);
    if (model.dim == 1) {
        j["spline_bins"] = model.spline_bins;
        j["spline_bound"] = model.spline_bound;
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& l : model.layers) arr.push_back(net_to_json(l.net));
        j["layers"] = std::move(arr);
    } else {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& c : model.couplings) {
            nlohmann::ordered_json cj;
            cj["transformed"] = c.transformed;
            cj["C"] = c.C;
            cj["mu"] = net_to_json(c.mu);
            cj["nu"] = net_to_json(c.nu);
            arr.push_back(std::move(cj));
        }
        j["couplings"] = std::move(arr);
    }
    atomic_write_file(path, j.dump(2) + "\n");
}

inline FlowModel load_flow(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint parse failed: " + std::string(e.what()));
    }
    if (j.value("format", "") != "levyflow-checkpoint")
        throw IoError("not a flow checkpoint: " + path.string());
    FlowModel m;
    m.dim = j.at("dim").get<int>();
    if (m.dim != 1 && m.dim != 2) throw IoError("checkpoint: bad dim");
    auto shift = j.at("shift").get<std::vector<double>>();
    auto scale = j.at("scale").get<std::vector<double>>();
    if (static_cast<int>(shift.size()) != m.dim || static_cast<int>(scale.size()) != m.dim)
        throw IoError("checkpoint: standardization size mismatch");
    for (int i = 0; i < m.dim; ++i) {
        m.shift[static_cast<std::size_t>(i)] = shift[static_cast<std::size_t>(i)];
        m.scale[static_cast<std::size_t>(i)] = scale[static_cast<std::size_t>(i)];
    }
    if (m.dim == 1) {
        m.spline_bins = j.at("spline_bins").get<int>();
        m.spline_bound = j.at("spline_bound").get<double>();
        for (const auto& lj : j.at("layers")) {
            SplineLayer l;
            l.net = net_from_json(lj);
            m.layers.push_back(std::move(l));
        }
        rebuild_spline_cache(m);
    } else {
        for (const auto& cj : j.at("couplings")) {
            CouplingLayer c;
            c.transformed = cj.at("transformed").get<int>();
            c.C = cj.at("C").get<double>();
            c.mu = net_from_json(cj.at("mu"));
            c.nu = net_from_json(cj.at("nu"));
            m.couplings.push_back(std::move(c));
        }
    }
    m.validate();
    return m;
}

}  // namespace levyflow
