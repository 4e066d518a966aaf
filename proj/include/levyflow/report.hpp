// Result persistence and the report stage: error norms against the known
// simulated system, CSV tables and SVG plots.
#pragma once

#include <array>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <string>
#include <vector>

#include "levyflow/config.hpp"
#include "levyflow/extract.hpp"
#include "levyflow/io.hpp"
#include "levyflow/svg.hpp"

namespace levyflow {

inline void save_extract_result(const ExtractResult& res, const std::string& name,
                                double ball_eps, const fs::path& path) {
    nlohmann::ordered_json j;
    j["format"] = "levyflow-result";
    j["version"] = 1;
    j["name"] = name;
    j["dim"] = res.dim;
    j["t_star"] = res.t_star;
    j["ball_eps"] = ball_eps;
    if (res.jumps_estimated) {
        nlohmann::ordered_json jj;
        jj["alpha"] = res.jump.alpha;
        jj["sigma"] = res.jump.sigma;
        jj["intercept"] = res.jump.intercept;
        jj["eps"] = res.jump.eps;
        jj["counts"] = res.jump.counts;
        jj["rates"] = res.jump.rates;
        j["jump"] = std::move(jj);
    } else {
        j["jump"] = nullptr;
    }
    nlohmann::ordered_json est = nlohmann::ordered_json::array();
    for (const auto& e : res.estimates) {
        nlohmann::ordered_json ej;
        auto z = nlohmann::ordered_json::array();
        for (int d = 0; d < res.dim; ++d) z.push_back(e.z[static_cast<std::size_t>(d)]);
        ej["z"] = std::move(z);
        ej["ball_mass"] = e.ball_mass;
        auto dr = nlohmann::ordered_json::array();
        for (int d = 0; d < res.dim; ++d) dr.push_back(e.drift[static_cast<std::size_t>(d)]);
        ej["drift"] = std::move(dr);
        auto di = nlohmann::ordered_json::array();
        for (int r = 0; r < res.dim; ++r) {
            auto row = nlohmann::ordered_json::array();
            for (int c = 0; c < res.dim; ++c)
                row.push_back(e.diffusion[static_cast<std::size_t>(r * 2 + c)]);
            di.push_back(std::move(row));
        }
        ej["diffusion"] = std::move(di);
        est.push_back(std::move(ej));
    }
    j["estimates"] = std::move(est);
    atomic_write_file(path, j.dump(2) + "\n");
}

inline ExtractResult load_extract_result(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("result parse failed: " + std::string(e.what()));
    }
    if (j.value("format", "") != "levyflow-result")
        throw IoError("not an extraction result: " + path.string());
    ExtractResult res;
    res.dim = j.at("dim").get<int>();
    res.t_star = j.at("t_star").get<double>();
    if (!j.at("jump").is_null()) {
        res.jumps_estimated = true;
        const auto& jj = j.at("jump");
        res.jump.alpha = jj.at("alpha").get<double>();
        res.jump.sigma = jj.at("sigma").get<double>();
        res.jump.intercept = jj.at("intercept").get<double>();
        res.jump.eps = jj.at("eps").get<std::vector<double>>();
        res.jump.counts = jj.at("counts").get<std::vector<std::size_t>>();
        res.jump.rates = jj.at("rates").get<std::vector<double>>();
    }
    for (const auto& ej : j.at("estimates")) {
        ZEstimate e;
        const auto z = ej.at("z").get<std::vector<double>>();
        for (std::size_t d = 0; d < z.size(); ++d) e.z[d] = z[d];
        e.ball_mass = ej.at("ball_mass").get<double>();
        const auto dr = ej.at("drift").get<std::vector<double>>();
        for (std::size_t d = 0; d < dr.size(); ++d) e.drift[d] = dr[d];
        const auto& di = ej.at("diffusion");
        for (int r = 0; r < res.dim; ++r)
            for (int c = 0; c < res.dim; ++c)
                e.diffusion[static_cast<std::size_t>(r * 2 + c)] =
                    di[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
        res.estimates.push_back(e);
    }
    return res;
}

// ---- truth evaluation ----

inline std::array<double, 2> drift_truth(const SdeSpec& sde, const Point& z) {
    std::array<double, 2> b{};
    const std::span<const double> vars(z.data(), static_cast<std::size_t>(sde.dim));
    for (int i = 0; i < sde.dim; ++i)
        b[static_cast<std::size_t>(i)] = sde.drift[static_cast<std::size_t>(i)].eval(vars);
    return b;
}

inline std::array<double, 4> diffusion_truth(const SdeSpec& sde, const Point& z) {
    double lam[4] = {0, 0, 0, 0};
    const std::span<const double> vars(z.data(), static_cast<std::size_t>(sde.dim));
    for (int i = 0; i < sde.dim; ++i)
        for (int j = 0; j < sde.dim; ++j)
            lam[i * 2 + j] =
                sde.diffusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(vars);
    std::array<double, 4> a{};
    for (int i = 0; i < sde.dim; ++i)
        for (int j = 0; j < sde.dim; ++j) {
            double s = 0.0;
            for (int k = 0; k < sde.dim; ++k) s += lam[i * 2 + k] * lam[j * 2 + k];
            a[static_cast<std::size_t>(i * 2 + j)] = s;
        }
    return a;
}

struct ReportMetrics {
    std::size_t n_total = 0, n_interior = 0;
    double drift_rel_l2 = std::numeric_limits<double>::quiet_NaN();
    double drift_max_abs_err = 0.0;
    double drift_truth_l2 = 0.0;
    double diff_diag_rel_l2 = std::numeric_limits<double>::quiet_NaN();
    double diff_diag_max_abs_err = 0.0;
    double diff_diag_truth_l2 = 0.0;
    double diff_offdiag_max_abs = 0.0;
    double ball_mass_min = std::numeric_limits<double>::infinity();
    double ball_mass_max = 0.0;
    bool has_jump_truth = false;
    double alpha_true = 0.0, sigma_true = 0.0;
};

inline bool z_is_interior(const RunConfig& cfg, const Point& z) {
    for (int d = 0; d < cfg.sde.dim; ++d) {
        const std::size_t k = static_cast<std::size_t>(d);
        const double span_tol = 1e-9 * (cfg.grid.hi[k] - cfg.grid.lo[k]);
        if (z[k] < cfg.grid.lo[k] + cfg.report.interior_margin - span_tol) return false;
        if (z[k] > cfg.grid.hi[k] - cfg.report.interior_margin + span_tol) return false;
    }
    return true;
}

inline ReportMetrics compute_metrics(const RunConfig& cfg, const ExtractResult& res) {
    ReportMetrics m;
    m.n_total = res.estimates.size();
    double err2 = 0.0, truth2 = 0.0, derr2 = 0.0, dtruth2 = 0.0;
    for (const auto& e : res.estimates) {
        if (!z_is_interior(cfg, e.z)) continue;
        ++m.n_interior;
        const auto bt = drift_truth(cfg.sde, e.z);
        const auto at = diffusion_truth(cfg.sde, e.z);
        for (int d = 0; d < res.dim; ++d) {
            const std::size_t k = static_cast<std::size_t>(d);
            const double de = e.drift[k] - bt[k];
            err2 += de * de;
            truth2 += bt[k] * bt[k];
            m.drift_max_abs_err = std::max(m.drift_max_abs_err, std::abs(de));
            const std::size_t kk = static_cast<std::size_t>(d * 2 + d);
            const double ae = e.diffusion[kk] - at[kk];
            derr2 += ae * ae;
            dtruth2 += at[kk] * at[kk];
            m.diff_diag_max_abs_err = std::max(m.diff_diag_max_abs_err, std::abs(ae));
        }
        if (res.dim == 2)
            m.diff_offdiag_max_abs = std::max(m.diff_offdiag_max_abs, std::abs(e.diffusion[1]));
        m.ball_mass_min = std::min(m.ball_mass_min, e.ball_mass);
        m.ball_mass_max = std::max(m.ball_mass_max, e.ball_mass);
    }
    m.drift_truth_l2 = std::sqrt(truth2);
    if (truth2 > 0.0) m.drift_rel_l2 = std::sqrt(err2 / truth2);
    m.diff_diag_truth_l2 = std::sqrt(dtruth2);
    if (dtruth2 > 0.0) m.diff_diag_rel_l2 = std::sqrt(derr2 / dtruth2);
    if (cfg.sde.levy) {
        m.has_jump_truth = true;
        m.alpha_true = cfg.sde.levy->alpha;
        m.sigma_true = cfg.sde.levy->sigma;
    }
    return m;
}

// ---- file emission ----

inline void write_report_tables(const RunConfig& cfg, const ExtractResult& res,
                                const fs::path& dir) {
    const int n = res.dim;
    std::string drift_csv = n == 1 ? "z1,b1_true,b1_hat\n" : "z1,z2,b1_true,b1_hat,b2_true,b2_hat\n";
    std::string diff_csv = n == 1 ? "z1,a11_true,a11_hat\n"
                                  : "z1,z2,a11_true,a11_hat,a22_true,a22_hat,a12_hat\n";
    for (const auto& e : res.estimates) {
        const auto bt = drift_truth(cfg.sde, e.z);
        const auto at = diffusion_truth(cfg.sde, e.z);
        std::string zs = format_g17(e.z[0]);
        if (n == 2) zs += "," + format_g17(e.z[1]);
        drift_csv += zs + "," + format_g17(bt[0]) + "," + format_g17(e.drift[0]);
        if (n == 2) drift_csv += "," + format_g17(bt[1]) + "," + format_g17(e.drift[1]);
        drift_csv += "\n";
        diff_csv += zs + "," + format_g17(at[0]) + "," + format_g17(e.diffusion[0]);
        if (n == 2)
            diff_csv += "," + format_g17(at[3]) + "," + format_g17(e.diffusion[3]) + "," +
                        format_g17(e.diffusion[1]);
        diff_csv += "\n";
    }
    atomic_write_file(dir / "drift_table.csv", drift_csv);
    atomic_write_file(dir / "diffusion_table.csv", diff_csv);
}

inline std::vector<std::string> write_report_plots(const RunConfig& cfg, const ExtractResult& res,
                                                   const fs::path& dir) {
    std::vector<std::string> files;
    const fs::path plots = dir / "plots";
    fs::create_directories(plots);

    if (res.jumps_estimated) {
        PlotSeries pts{"measured rate", "#d62728", true, {}, {}};
        PlotSeries fitline{"fitted power law", "#1f77b4", false, {}, {}};
        for (std::size_t j = 0; j < res.jump.eps.size(); ++j) {
            pts.x.push_back(res.jump.eps[j]);
            pts.y.push_back(res.jump.rates[j]);
        }
        const int nf = 50;
        const double e0 = res.jump.eps.front() * 0.9, e1 = res.jump.eps.back() * 1.1;
        for (int i = 0; i <= nf; ++i) {
            const double e = e0 * std::pow(e1 / e0, static_cast<double>(i) / nf);
            fitline.x.push_back(e);
            fitline.y.push_back(std::exp(res.jump.intercept - res.jump.alpha * std::log(e)));
        }
        svg_plot(plots / "jump_fit.svg", "annulus escape rate vs radius", "eps", "rate",
                 {fitline, pts}, true, true);
        files.push_back("plots/jump_fit.svg");
    }

    if (res.dim == 1) {
        PlotSeries bt{"true drift", "#1f77b4", false, {}, {}};
        PlotSeries bh{"estimated", "#d62728", true, {}, {}};
        PlotSeries at{"true diffusion", "#1f77b4", false, {}, {}};
        PlotSeries ah{"estimated", "#d62728", true, {}, {}};
        for (const auto& e : res.estimates) {
            const auto t = drift_truth(cfg.sde, e.z);
            const auto a = diffusion_truth(cfg.sde, e.z);
            bt.x.push_back(e.z[0]);
            bt.y.push_back(t[0]);
            bh.x.push_back(e.z[0]);
            bh.y.push_back(e.drift[0]);
            at.x.push_back(e.z[0]);
            at.y.push_back(a[0]);
            ah.x.push_back(e.z[0]);
            ah.y.push_back(e.diffusion[0]);
        }
        svg_plot(plots / "drift.svg", "drift b(z)", "z", "b", {bt, bh});
        svg_plot(plots / "diffusion.svg", "diffusion a(z)", "z", "a", {at, ah});
        files.push_back("plots/drift.svg");
        files.push_back("plots/diffusion.svg");
        return files;
    }

    // dim 2: heatmaps on the burst grid (first coordinate slowest in the
    // estimate ordering, so column index = inner axis).
    const int n1 = cfg.grid.points[0], n2 = cfg.grid.points[1];
    auto heas = [&](const std::string& stem, const std::string& title, auto&& get) {
        std::vector<double> v(static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2));
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j)
                // heatmap rows follow x2 (inner axis), columns x1
                v[static_cast<std::size_t>(j) * static_cast<std::size_t>(n1) +
                  static_cast<std::size_t>(i)] =
                    get(res.estimates[static_cast<std::size_t>(i) * static_cast<std::size_t>(n2) +
                                      static_cast<std::size_t>(j)]);
        svg_heatmap(plots / (stem + ".svg"), title, v, n1, n2, cfg.grid.lo[0], cfg.grid.hi[0],
                    cfg.grid.lo[1], cfg.grid.hi[1]);
        files.push_back("plots/" + stem + ".svg");
    };
    heas("drift1_hat", "estimated b1(z)", [](const ZEstimate& e) { return e.drift[0]; });
    heas("drift2_hat", "estimated b2(z)", [](const ZEstimate& e) { return e.drift[1]; });
    heas("drift1_err", "b1 error", [&](const ZEstimate& e) {
        return e.drift[0] - drift_truth(cfg.sde, e.z)[0];
    });
    heas("drift2_err", "b2 error", [&](const ZEstimate& e) {
        return e.drift[1] - drift_truth(cfg.sde, e.z)[1];
    });
    heas("diff11_hat", "estimated a11(z)", [](const ZEstimate& e) { return e.diffusion[0]; });
    heas("diff22_hat", "estimated a22(z)", [](const ZEstimate& e) { return e.diffusion[3]; });
    return files;
}

inline nlohmann::ordered_json report_to_json(const RunConfig& cfg, const ExtractResult& res,
                                             const ReportMetrics& m,
                                             const std::vector<std::string>& plots) {
    nlohmann::ordered_json j;
    j["format"] = "levyflow-report";
    j["version"] = 1;
    j["name"] = cfg.name;
    j["dim"] = res.dim;
    j["n_grid"] = m.n_total;
    j["n_interior"] = m.n_interior;
    j["interior_margin"] = cfg.report.interior_margin;
    if (res.jumps_estimated) {
        nlohmann::ordered_json jj;
        jj["alpha_hat"] = res.jump.alpha;
        jj["sigma_hat"] = res.jump.sigma;
        if (m.has_jump_truth) {
            jj["alpha_true"] = m.alpha_true;
            jj["sigma_true"] = m.sigma_true;
        }
        j["jump"] = std::move(jj);
    } else {
        j["jump"] = nullptr;
    }
    nlohmann::ordered_json dj;
    if (std::isfinite(m.drift_rel_l2)) dj["rel_l2"] = m.drift_rel_l2;
    dj["max_abs_err"] = m.drift_max_abs_err;
    dj["truth_l2"] = m.drift_truth_l2;
    j["drift"] = std::move(dj);
    nlohmann::ordered_json aj;
    if (std::isfinite(m.diff_diag_rel_l2)) aj["diag_rel_l2"] = m.diff_diag_rel_l2;
    aj["diag_max_abs_err"] = m.diff_diag_max_abs_err;
    aj["diag_truth_l2"] = m.diff_diag_truth_l2;
    if (res.dim == 2) aj["offdiag_max_abs"] = m.diff_offdiag_max_abs;
    j["diffusion"] = std::move(aj);
    j["ball_mass"] = {{"min", m.ball_mass_min}, {"max", m.ball_mass_max}};
    j["plots"] = plots;
    return j;
}

inline ReportMetrics write_report(const RunConfig& cfg, const ExtractResult& res,
                                  const fs::path& dir) {
    fs::create_directories(dir);
    const ReportMetrics m = compute_metrics(cfg, res);
    write_report_tables(cfg, res, dir);
    const auto plots = write_report_plots(cfg, res, dir);
    atomic_write_file(dir / "report.json", report_to_json(cfg, res, m, plots).dump(2) + "\n");
    return m;
}

}  // namespace levyflow
