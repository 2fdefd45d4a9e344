// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vice::stats {

struct Correlation {
    double r = 0.0;
    /// Two-sided p-value, Student t approximation with n - 2 degrees of freedom.
    double p = 1.0;
};

/// 1-based ranks; ties get the mean of the positions they occupy.
std::vector<double> rank(std::span<const double> values);

/// Sample Pearson correlation. Throws DegenerateInput for n < 3, unequal
/// lengths, non-finite values or a constant input (the message says which).
Correlation pearson(std::span<const double> x, std::span<const double> y);

/// Pearson on average ranks; the p-value uses the same t approximation.
Correlation spearman(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value for |r| from t = r * sqrt((n - 2) / (1 - r^2)).
double t_test_p(double r, std::size_t n);

enum class Method { Pearson, Spearman };

/// Permutation p-value: the share of `permutations` seeded shuffles of y
/// whose |r| reaches the observed |r|, with the usual +1 correction.
double permutation_p(std::span<const double> x, std::span<const double> y, Method method,
                     int permutations = 10000, std::uint64_t seed = 0);

struct BlandAltmanPoint {
    double mean = 0.0;
    double diff = 0.0;
    bool operator==(const BlandAltmanPoint&) const = default;
};

inline constexpr double kLoaMultiplier = 1.96;

struct BlandAltman {
    double mean_diff = 0.0;
    /// Sample standard deviation (n - 1) of the differences.
    double sd_diff = 0.0;
    double loa_low = 0.0;
    double loa_high = 0.0;
    /// ((a + b) / 2, a - b) per item.
    std::vector<BlandAltmanPoint> points;
};

/// Throws DegenerateInput for n < 2, unequal lengths or non-finite values.
BlandAltman bland_altman(std::span<const double> a, std::span<const double> b);

/// Min-max map onto [lo, hi]. Throws DegenerateInput for a constant input and
/// InvalidArgument unless hi > lo.
std::vector<double> rescale(std::span<const double> scores, double lo, double hi);

struct PairedScores {
    std::vector<std::string> ids;
    std::vector<double> human;
    std::vector<double> metric;
    std::string metric_name;
};

struct AgreementOptions {
    /// Min-max rescale the metric to [0, 10] before Bland-Altman.
    bool rescale_metric = true;
    bool permutation = false;
    int permutations = 10000;
    std::uint64_t seed = 0;
};

struct AgreementReport {
    std::string metric_name;
    std::size_t n = 0;
    double pearson_r = 0.0;
    double pearson_p = 1.0;
    double spearman_rho = 0.0;
    double spearman_p = 1.0;
    std::optional<double> pearson_perm_p;
    std::optional<double> spearman_perm_p;
    bool rescaled = false;
    /// Metric (possibly rescaled) minus human.
    BlandAltman bland_altman;
};

AgreementReport agreement(const PairedScores& scores, const AgreementOptions& options = {});

/// Scores table: header `id,human,<metric>...`, one row per item.
struct ScoreTable {
    std::vector<std::string> ids;
    std::vector<double> human;
    std::vector<std::string> metric_names;
    std::map<std::string, std::vector<double>> metrics;
};

/// Throws SchemaError on a bad header, a missing or non-numeric cell, a
/// non-finite value or a duplicate id.
ScoreTable parse_scores_csv(std::string_view body);

/// Throws SchemaError naming the column when `metric` is not in the table.
PairedScores paired(const ScoreTable& table, const std::string& metric);

/// "| Model | Pearson | Spearman |" with five decimals.
std::string markdown_table(std::span<const AgreementReport> reports);

/// Scatter of (mean, diff) with horizontal lines at the mean difference and
/// both limits of agreement. Output depends only on the input values.
std::string bland_altman_svg(const BlandAltman& ba, std::string_view title);

void to_json(nlohmann::json& j, const BlandAltman& ba);
void to_json(nlohmann::json& j, const AgreementReport& r);

} // namespace vice::stats
