// Burst dataset on disk: one directory with meta.json plus one CSV of
// endpoints per burst (burst_<idx>.csv, header x1[,x2], 17 significant
// digits).
#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "levyflow/io.hpp"
#include "levyflow/sde.hpp"

namespace levyflow {

inline void save_dataset(const BurstDataset& ds, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::ordered_json meta;
    meta["dim"] = ds.dim;
    meta["t_star"] = ds.t_star;
    meta["seed"] = ds.seed;
    meta["spec_digest"] = ds.spec_digest;
    meta["n_bursts"] = ds.bursts.size();
    meta["n_samples"] = ds.n_samples();
    auto grid = nlohmann::ordered_json::array();
    for (const auto& b : ds.bursts) {
        auto z = nlohmann::ordered_json::array();
        for (int i = 0; i < ds.dim; ++i) z.push_back(b.z[static_cast<std::size_t>(i)]);
        grid.push_back(z);
    }
    meta["grid"] = grid;
    atomic_write_file(dir / "meta.json", meta.dump(2) + "\n");

    for (std::size_t i = 0; i < ds.bursts.size(); ++i) {
        std::string csv = ds.dim == 1 ? "x1\n" : "x1,x2\n";
        csv.reserve(ds.bursts[i].samples.size() * 26u * static_cast<std::size_t>(ds.dim) + 8);
        for (const Point& p : ds.bursts[i].samples) {
            csv += format_g17(p[0]);
            if (ds.dim == 2) {
                csv += ',';
                csv += format_g17(p[1]);
            }
            csv += '\n';
        }
        atomic_write_file(dir / ("burst_" + std::to_string(i) + ".csv"), csv);
    }
}

inline BurstDataset load_dataset(const fs::path& dir) {
    if (!fs::exists(dir / "meta.json")) throw IoError("dataset meta.json not found in " + dir.string());
    const auto meta = nlohmann::json::parse(read_file(dir / "meta.json"));
    BurstDataset ds;
    ds.dim = meta.at("dim").get<int>();
    ds.t_star = meta.at("t_star").get<double>();
    ds.seed = meta.at("seed").get<std::uint64_t>();
    ds.spec_digest = meta.at("spec_digest").get<std::string>();
    const auto& grid = meta.at("grid");
    ds.bursts.resize(grid.size());

    for (std::size_t i = 0; i < grid.size(); ++i) {
        Burst& b = ds.bursts[i];
        b.z = {0.0, 0.0};
        for (int d = 0; d < ds.dim; ++d) b.z[static_cast<std::size_t>(d)] = grid[i][static_cast<std::size_t>(d)].get<double>();
        const std::string csv = read_file(dir / ("burst_" + std::to_string(i) + ".csv"));
        std::size_t pos = csv.find('\n');
        if (pos == std::string::npos) throw IoError("empty burst csv in " + dir.string());
        ++pos;  // skip header
        while (pos < csv.size()) {
            char* end = nullptr;
            Point p{0.0, 0.0};
            p[0] = std::strtod(csv.c_str() + pos, &end);
            pos = static_cast<std::size_t>(end - csv.c_str());
            if (ds.dim == 2) {
                ++pos;  // comma
                p[1] = std::strtod(csv.c_str() + pos, &end);
                pos = static_cast<std::size_t>(end - csv.c_str());
            }
            while (pos < csv.size() && (csv[pos] == '\n' || csv[pos] == '\r')) ++pos;
            b.samples.push_back(p);
        }
    }
    return ds;
}

}  // namespace levyflow
