#pragma once

#include "uc3rl/harness/experiment.hpp"
#include "uc3rl/harness/instance_io.hpp"

#include <algorithm>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

namespace uc3rl::harness {

/// %.12g formatting, independent of locale and stream state.
inline std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline std::string regret_csv(std::span<const RegretRecord> records) {
    std::string out = "seed,t,context_id,vstar,vplayed,instant_regret,cumulative_regret\n";
    for (const auto& rec : records)
        for (const auto& r : rec.rows) {
            out += std::to_string(rec.seed) + "," + std::to_string(r.t) + "," + std::to_string(r.context) + "," +
                   format_real(r.vstar) + "," + format_real(r.vplayed) + "," + format_real(r.instant_regret) + "," +
                   format_real(r.cumulative_regret) + "\n";
        }
    return out;
}

inline void export_csv(std::span<const RegretRecord> records, const std::string& path) {
    if (records.empty()) throw ConfigError("export_csv: no records");
    write_text_file(path, regret_csv(records));
}

/// Realized-reward returns and realized potentials, not used for regret.
inline std::string diagnostics_csv(std::span<const RegretRecord> records) {
    std::string out = "seed,t,context_id,realized_return,potential\n";
    for (const auto& rec : records)
        for (const auto& r : rec.rows)
            out += std::to_string(rec.seed) + "," + std::to_string(r.t) + "," + std::to_string(r.context) + "," +
                   format_real(r.realized_return) + "," + format_real(r.potential) + "\n";
    return out;
}

inline std::string summary_csv(const ExperimentResult& result) {
    std::string out = "algorithm,t,mean_cumulative_regret,std_cumulative_regret,seeds\n";
    for (const auto& s : result.summary)
        out += to_string(result.algorithm) + "," + std::to_string(s.t) + "," + format_real(s.mean) + "," +
               format_real(s.stddev) + "," + std::to_string(result.records.size()) + "\n";
    return out;
}

/// Line chart of cumulative regret vs t: one faint path per seed and one
/// bold path for the mean over seeds.
inline std::string regret_svg(std::span<const RegretRecord> records) {
    if (records.empty()) throw ConfigError("export_svg: no records");
    constexpr double width = 800, height = 500, margin = 60;
    std::size_t episodes = 0;
    double ymax = 0.0;
    for (const auto& rec : records) {
        episodes = std::max(episodes, rec.rows.size());
        for (const auto& r : rec.rows) ymax = std::max(ymax, r.cumulative_regret);
    }
    if (ymax <= 0.0) ymax = 1.0;
    const double xspan = episodes > 1 ? static_cast<double>(episodes - 1) : 1.0;
    auto px = [&](std::size_t t) { return margin + (width - 2 * margin) * static_cast<double>(t - 1) / xspan; };
    auto py = [&](double y) { return height - margin - (height - 2 * margin) * std::max(0.0, y) / ymax; };
    auto path = [&](const std::vector<double>& ys) {
        std::string d;
        for (std::size_t i = 0; i < ys.size(); ++i) {
            d += (i == 0 ? "M" : " L") + format_real(px(i + 1)) + "," + format_real(py(ys[i]));
        }
        return d;
    };

    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_real(width) + "\" height=\"" +
           format_real(height) + "\" viewBox=\"0 0 " + format_real(width) + " " + format_real(height) + "\">\n";
    out += "<title>Cumulative pseudo-regret</title>\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + format_real(width) + "\" height=\"" + format_real(height) +
           "\" fill=\"white\"/>\n";
    out += "<line x1=\"" + format_real(margin) + "\" y1=\"" + format_real(height - margin) + "\" x2=\"" +
           format_real(width - margin) + "\" y2=\"" + format_real(height - margin) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + format_real(margin) + "\" y1=\"" + format_real(margin) + "\" x2=\"" + format_real(margin) +
           "\" y2=\"" + format_real(height - margin) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + format_real(width / 2) + "\" y=\"" + format_real(height - 20) +
           "\" text-anchor=\"middle\" font-size=\"14\">episode t (T = " + std::to_string(episodes) + ")</text>\n";
    out += "<text x=\"20\" y=\"" + format_real(margin - 20) + "\" font-size=\"14\">cumulative regret (max " +
           format_real(ymax) + ")</text>\n";

    std::vector<double> mean(episodes, 0.0);
    std::vector<std::size_t> counts(episodes, 0);
    for (const auto& rec : records) {
        std::vector<double> ys;
        ys.reserve(rec.rows.size());
        for (std::size_t i = 0; i < rec.rows.size(); ++i) {
            ys.push_back(rec.rows[i].cumulative_regret);
            mean[i] += rec.rows[i].cumulative_regret;
            ++counts[i];
        }
        out += "<path class=\"seed\" data-seed=\"" + std::to_string(rec.seed) + "\" d=\"" + path(ys) +
               "\" fill=\"none\" stroke=\"steelblue\" stroke-opacity=\"0.3\" stroke-width=\"1\"/>\n";
    }
    for (std::size_t i = 0; i < episodes; ++i) mean[i] /= static_cast<double>(std::max<std::size_t>(counts[i], 1));
    out += "<path class=\"mean\" d=\"" + path(mean) + "\" fill=\"none\" stroke=\"darkred\" stroke-width=\"2.5\"/>\n";
    out += "</svg>\n";
    return out;
}

inline void export_svg(std::span<const RegretRecord> records, const std::string& path) {
    write_text_file(path, regret_svg(records));
}

}  // namespace uc3rl::harness
