// SPDX-License-Identifier: Apache-2.0
#include "vice/stats/stats.hpp"

#include "vice/core/csv.hpp"
#include "vice/core/error.hpp"
#include "vice/core/text.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace vice::stats {

namespace {

void check_finite(std::span<const double> v, const char* name) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            fail(ErrorCode::DegenerateInput, fmt::format("{}[{}] is not finite", name, i));
        }
    }
}

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_n) {
    if (x.size() != y.size()) {
        fail(ErrorCode::DegenerateInput, fmt::format("x has {} values, y has {}", x.size(), y.size()));
    }
    if (x.size() < min_n) {
        fail(ErrorCode::DegenerateInput, fmt::format("need at least {} pairs, got {}", min_n, x.size()));
    }
    check_finite(x, "x");
    check_finite(y, "y");
}

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        fail(ErrorCode::DegenerateInput, "x has zero variance");
    }
    if (syy == 0.0) {
        fail(ErrorCode::DegenerateInput, "y has zero variance");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double correlate(std::span<const double> x, std::span<const double> y, Method method) {
    if (method == Method::Pearson) {
        return pearson_r(x, y);
    }
    auto rx = rank(x);
    auto ry = rank(y);
    return pearson_r(rx, ry);
}

} // namespace

std::vector<double> rank(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]]) {
            ++j;
        }
        // Positions i..j-1 (0-based) share the mean of ranks i+1..j.
        const double shared = static_cast<double>(i + 1 + j) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            ranks[order[k]] = shared;
        }
        i = j;
    }
    return ranks;
}

double t_test_p(double r, std::size_t n) {
    require(n >= 3, "t_test_p: n must be >= 3");
    const double a = std::fabs(r);
    if (a >= 1.0) {
        return 0.0;
    }
    const double df = static_cast<double>(n - 2);
    const double t = a * std::sqrt(df / (1.0 - a * a));
    boost::math::students_t dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, 3);
    const double r = pearson_r(x, y);
    return {r, t_test_p(r, x.size())};
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, 3);
    const double rho = correlate(x, y, Method::Spearman);
    return {rho, t_test_p(rho, x.size())};
}

double permutation_p(std::span<const double> x, std::span<const double> y, Method method, int permutations,
                     std::uint64_t seed) {
    check_pair(x, y, 3);
    require(permutations >= 1, "permutation_p: permutations must be >= 1");
    const double observed = std::fabs(correlate(x, y, method));
    // Tolerance so that permutations reproducing the observed order count.
    const double threshold = observed - 1e-12;
    std::mt19937_64 rng(seed);
    std::vector<double> shuffled(y.begin(), y.end());
    int hits = 0;
    for (int i = 0; i < permutations; ++i) {
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        if (std::fabs(correlate(x, shuffled, method)) >= threshold) {
            ++hits;
        }
    }
    return static_cast<double>(hits + 1) / static_cast<double>(permutations + 1);
}

BlandAltman bland_altman(std::span<const double> a, std::span<const double> b) {
    check_pair(a, b, 2);
    BlandAltman out;
    std::vector<double> diffs;
    diffs.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.points.push_back({(a[i] + b[i]) / 2.0, a[i] - b[i]});
        diffs.push_back(a[i] - b[i]);
    }
    out.mean_diff = mean(diffs);
    double ss = 0.0;
    for (double d : diffs) {
        ss += (d - out.mean_diff) * (d - out.mean_diff);
    }
    out.sd_diff = std::sqrt(ss / static_cast<double>(diffs.size() - 1));
    out.loa_low = out.mean_diff - kLoaMultiplier * out.sd_diff;
    out.loa_high = out.mean_diff + kLoaMultiplier * out.sd_diff;
    return out;
}

std::vector<double> rescale(std::span<const double> scores, double lo, double hi) {
    require(hi > lo, fmt::format("rescale: hi ({}) must exceed lo ({})", hi, lo));
    if (scores.empty()) {
        fail(ErrorCode::DegenerateInput, "rescale: no scores");
    }
    check_finite(scores, "scores");
    const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
    const double min = *mn;
    const double range = *mx - min;
    if (range == 0.0) {
        fail(ErrorCode::DegenerateInput, "rescale: scores are constant");
    }
    std::vector<double> out;
    out.reserve(scores.size());
    for (double s : scores) {
        out.push_back(lo + (s - min) / range * (hi - lo));
    }
    return out;
}

AgreementReport agreement(const PairedScores& scores, const AgreementOptions& options) {
    if (scores.human.size() != scores.metric.size()) {
        fail(ErrorCode::DegenerateInput, fmt::format("metric '{}': {} human scores, {} metric scores",
                                                     scores.metric_name, scores.human.size(), scores.metric.size()));
    }
    AgreementReport r;
    r.metric_name = scores.metric_name;
    r.n = scores.human.size();
    const auto p = pearson(scores.metric, scores.human);
    const auto s = spearman(scores.metric, scores.human);
    r.pearson_r = p.r;
    r.pearson_p = p.p;
    r.spearman_rho = s.r;
    r.spearman_p = s.p;
    if (options.permutation) {
        r.pearson_perm_p = permutation_p(scores.metric, scores.human, Method::Pearson, options.permutations, options.seed);
        r.spearman_perm_p =
            permutation_p(scores.metric, scores.human, Method::Spearman, options.permutations, options.seed);
    }
    if (options.rescale_metric) {
        auto m = rescale(scores.metric, 0.0, 10.0);
        r.bland_altman = bland_altman(m, scores.human);
        r.rescaled = true;
    } else {
        r.bland_altman = bland_altman(scores.metric, scores.human);
    }
    return r;
}

ScoreTable parse_scores_csv(std::string_view body) {
    const auto rows = csv::parse(body);
    if (rows.empty()) {
        fail(ErrorCode::SchemaError, "scores CSV is empty");
    }
    std::vector<std::string> header;
    for (const auto& h : rows.front()) {
        header.push_back(text::trim(h));
    }
    if (header.size() < 3 || header[0] != "id" || header[1] != "human") {
        fail(ErrorCode::SchemaError, "scores CSV header must be id,human,<metric>...");
    }
    ScoreTable table;
    std::set<std::string> names;
    for (std::size_t c = 2; c < header.size(); ++c) {
        if (header[c].empty() || !names.insert(header[c]).second) {
            fail(ErrorCode::SchemaError, fmt::format("scores CSV column {} has an empty or duplicate name", c + 1));
        }
        table.metric_names.push_back(header[c]);
        table.metrics[header[c]];
    }
    std::set<std::string> ids;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) {
            fail(ErrorCode::SchemaError,
                 fmt::format("scores CSV row {}: {} cells, header has {}", r + 1, row.size(), header.size()));
        }
        auto id = text::trim(row[0]);
        if (id.empty()) {
            fail(ErrorCode::SchemaError, fmt::format("scores CSV row {}: missing id", r + 1));
        }
        if (!ids.insert(id).second) {
            fail(ErrorCode::SchemaError, fmt::format("scores CSV row {}: duplicate id '{}'", r + 1, id));
        }
        table.ids.push_back(id);
        for (std::size_t c = 1; c < header.size(); ++c) {
            auto cell = text::trim(row[c]);
            double v = 0.0;
            const auto* first = cell.data();
            const auto* last = cell.data() + cell.size();
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (cell.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
                fail(ErrorCode::SchemaError,
                     fmt::format("scores CSV row {}, column '{}': '{}' is not a finite number", r + 1, header[c], cell));
            }
            if (c == 1) {
                table.human.push_back(v);
            } else {
                table.metrics[header[c]].push_back(v);
            }
        }
    }
    return table;
}

PairedScores paired(const ScoreTable& table, const std::string& metric) {
    auto it = table.metrics.find(metric);
    if (it == table.metrics.end()) {
        fail(ErrorCode::SchemaError, fmt::format("scores CSV has no column '{}'", metric));
    }
    return {table.ids, table.human, it->second, metric};
}

std::string markdown_table(std::span<const AgreementReport> reports) {
    std::string out = "| Model | Pearson | Spearman |\n|---|---|---|\n";
    for (const auto& r : reports) {
        out += fmt::format("| {} | {:.5f} | {:.5f} |\n", r.metric_name, r.pearson_r, r.spearman_rho);
    }
    return out;
}

std::string bland_altman_svg(const BlandAltman& ba, std::string_view title) {
    constexpr double kWidth = 640, kHeight = 480;
    constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
    double xmin = ba.points.empty() ? 0.0 : ba.points.front().mean;
    double xmax = xmin;
    double ymin = std::min(ba.loa_low, ba.mean_diff);
    double ymax = std::max(ba.loa_high, ba.mean_diff);
    for (const auto& p : ba.points) {
        xmin = std::min(xmin, p.mean);
        xmax = std::max(xmax, p.mean);
        ymin = std::min(ymin, p.diff);
        ymax = std::max(ymax, p.diff);
    }
    if (xmax - xmin < 1e-9) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if (ymax - ymin < 1e-9) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
    auto sy = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * plot_h; };
    // Keep -0.000 out of the output so identical plots diff cleanly.
    auto num = [](double v) {
        auto s = fmt::format("{:.3f}", v);
        return s == "-0.000" ? std::string("0.000") : s;
    };

    std::string escaped;
    for (char c : title) {
        switch (c) {
        case '<': escaped += "&lt;"; break;
        case '>': escaped += "&gt;"; break;
        case '&': escaped += "&amp;"; break;
        case '"': escaped += "&quot;"; break;
        default: escaped.push_back(c);
        }
    }

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
        kWidth, kHeight);
    svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
    svg += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n", kWidth / 2,
                       escaped);
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                       kTop, plot_w, plot_h);
    auto hline = [&](double y, const char* cls, const char* dash, const std::string& label) {
        svg += fmt::format("<line class=\"{}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\"{}/>\n", cls,
                           num(kLeft), num(sy(y)), num(kLeft + plot_w), num(sy(y)),
                           std::string_view(cls) == "mean" ? "blue" : "red",
                           dash[0] ? fmt::format(" stroke-dasharray=\"{}\"", dash) : std::string{});
        svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{} {}</text>\n",
                           num(kLeft + plot_w - 4), num(sy(y) - 4), label, num(y));
    };
    hline(ba.mean_diff, "mean", "", "mean");
    hline(ba.loa_high, "loa-high", "6,4", "+1.96 SD");
    hline(ba.loa_low, "loa-low", "6,4", "-1.96 SD");
    for (const auto& p : ba.points) {
        svg += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"black\" fill-opacity=\"0.6\"/>\n",
                           num(sx(p.mean)), num(sy(p.diff)));
    }
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">Mean of the two scores</text>\n",
                       num(kLeft + plot_w / 2), num(kHeight - 12));
    svg += fmt::format(
        "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 {0})\">"
        "Difference (metric - human)</text>\n",
        num(kTop + plot_h / 2));
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"start\">{}</text>\n", num(kLeft),
                       num(kTop + plot_h + 14), num(xmin));
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n", num(kLeft + plot_w),
                       num(kTop + plot_h + 14), num(xmax));
    svg += "</svg>\n";
    return svg;
}

void to_json(nlohmann::json& j, const BlandAltman& ba) {
    auto points = nlohmann::json::array();
    for (const auto& p : ba.points) {
        points.push_back({p.mean, p.diff});
    }
    j = {{"mean_diff", ba.mean_diff},
         {"sd_diff", ba.sd_diff},
         {"loa_low", ba.loa_low},
         {"loa_high", ba.loa_high},
         {"points", std::move(points)}};
}

void to_json(nlohmann::json& j, const AgreementReport& r) {
    j = {{"metric", r.metric_name},
         {"n", r.n},
         {"pearson_r", r.pearson_r},
         {"pearson_p", r.pearson_p},
         {"spearman_rho", r.spearman_rho},
         {"spearman_p", r.spearman_p},
         {"rescaled", r.rescaled},
         {"bland_altman", r.bland_altman}};
    if (r.pearson_perm_p) {
        j["pearson_perm_p"] = *r.pearson_perm_p;
    }
    if (r.spearman_perm_p) {
        j["spearman_perm_p"] = *r.spearman_perm_p;
    }
}

} // namespace vice::stats
