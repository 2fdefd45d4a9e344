// SPDX-License-Identifier: Apache-2.0
#include "helpers.hpp"
#include "oracles.hpp"

#include "vice/stats/stats.hpp"

#include <gtest/gtest.h>

#include <random>

namespace vice {
namespace {

using testing::error_code_of;
namespace oracle = testing::oracle;

std::vector<double> random_scores(std::mt19937_64& rng, std::size_t n, bool integers) {
    std::uniform_real_distribution<double> real(0.0, 10.0);
    std::uniform_int_distribution<int> whole(1, 5);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = integers ? whole(rng) : real(rng);
    }
    return v;
}

bool constant(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

TEST(StatsOracle, PearsonAndSpearmanAgreeOnRandomPairs) {
    std::mt19937_64 rng(20261019);
    int checked = 0;
    while (checked < 1000) {
        const auto n = 3 + rng() % 48;
        const bool ties = rng() % 2 == 0;
        auto x = random_scores(rng, n, ties);
        auto y = random_scores(rng, n, ties);
        if (constant(x) || constant(y)) {
            continue;
        }
        EXPECT_NEAR(stats::pearson(x, y).r, oracle::pearson(x, y), 1e-12);
        EXPECT_NEAR(stats::spearman(x, y).r, oracle::spearman(x, y), 1e-12);
        EXPECT_EQ(stats::rank(x), oracle::rank(x));
        ++checked;
    }
}

TEST(StatsOracle, FrozenReferenceValues) {
    EXPECT_EQ(stats::rank(std::vector<double>{7, 3, 7, 1}), (std::vector<double>{3.5, 2, 3.5, 1}));
    std::vector<double> x{1, 2, 2, 4};
    std::vector<double> y{3, 1, 2, 4};
    auto s = stats::spearman(x, y);
    EXPECT_NEAR(s.r, 0.316227766016838, 1e-12);
    EXPECT_NEAR(s.p, 0.683772233983162, 1e-9);
    auto p = stats::pearson(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{2, 4, 5, 4, 5});
    EXPECT_NEAR(p.r, 0.7745966692414834, 1e-12);
    EXPECT_NEAR(p.p, 0.1240270626575546, 1e-9);
}

TEST(StatsOracle, StudentTPValues) {
    EXPECT_NEAR(stats::t_test_p(0.5, 10), 0.14111328125000003, 1e-9);
    EXPECT_NEAR(stats::t_test_p(0.9, 5), 0.03738607346849863, 1e-9);
    EXPECT_NEAR(stats::t_test_p(-0.3, 50), 0.03428618003292995, 1e-9);
    EXPECT_NEAR(stats::t_test_p(0.1, 3), 0.9362314391414801, 1e-9);
    EXPECT_EQ(stats::t_test_p(1.0, 10), 0.0);
    EXPECT_EQ(stats::t_test_p(0.0, 10), 1.0);
}

TEST(StatsProperties, InvariantsOfTheCoefficients) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = 3 + rng() % 30;
        auto x = random_scores(rng, n, false);
        auto y = random_scores(rng, n, false);
        auto r = stats::pearson(x, y).r;
        EXPECT_GE(r, -1.0);
        EXPECT_LE(r, 1.0);
        EXPECT_NEAR(stats::pearson(y, x).r, r, 1e-15);
        std::vector<double> affine;
        for (double v : x) {
            affine.push_back(3.0 * v + 2.0);
        }
        EXPECT_NEAR(stats::pearson(affine, y).r, r, 1e-12);
        // A strictly monotone transform leaves the rank correlation unchanged.
        std::vector<double> cubed;
        for (double v : x) {
            cubed.push_back(v * v * v);
        }
        EXPECT_NEAR(stats::spearman(cubed, y).r, stats::spearman(x, y).r, 1e-12);
        EXPECT_NEAR(stats::pearson(x, x).r, 1.0, 1e-12);
        auto p = stats::pearson(x, y).p;
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
}

TEST(StatsErrors, DegenerateInputsAreRejectedWithReasons) {
    std::vector<double> a{1, 2, 3};
    std::vector<double> flat{2, 2, 2};
    EXPECT_EQ(error_code_of([&] { stats::pearson(a, std::vector<double>{1, 2}); }), ErrorCode::DegenerateInput);
    EXPECT_EQ(error_code_of([&] { stats::pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}); }),
              ErrorCode::DegenerateInput);
    EXPECT_EQ(error_code_of([&] { stats::spearman(a, std::vector<double>{1, NAN, 2}); }), ErrorCode::DegenerateInput);
    try {
        stats::pearson(a, flat);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("y has zero variance"), std::string::npos);
    }
    EXPECT_EQ(error_code_of([&] { stats::bland_altman(std::vector<double>{1}, std::vector<double>{1}); }),
              ErrorCode::DegenerateInput);
    EXPECT_EQ(error_code_of([&] { stats::rescale(flat, 0, 10); }), ErrorCode::DegenerateInput);
    EXPECT_EQ(error_code_of([&] { stats::rescale(a, 10, 0); }), ErrorCode::InvalidArgument);
}

TEST(StatsPermutation, SeededAndBounded) {
    std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
    auto p = stats::permutation_p(x, x, stats::Method::Pearson, 999, 3);
    EXPECT_GE(p, 1.0 / 1000);
    EXPECT_LT(p, 0.01);
    EXPECT_EQ(p, stats::permutation_p(x, x, stats::Method::Pearson, 999, 3));
    std::vector<double> y{3, 1, 4, 1, 5, 9, 2, 6};
    auto q = stats::permutation_p(x, y, stats::Method::Spearman, 500, 11);
    EXPECT_GT(q, 0.0);
    EXPECT_LE(q, 1.0);
    EXPECT_EQ(error_code_of([&] { stats::permutation_p(x, y, stats::Method::Pearson, 0); }), ErrorCode::InvalidArgument);
}

TEST(BlandAltman, WorkedExample) {
    auto ba = stats::bland_altman(std::vector<double>{2, 4, 6}, std::vector<double>{1, 5, 6});
    EXPECT_NEAR(ba.mean_diff, 0.0, 1e-15);
    EXPECT_NEAR(ba.sd_diff, 1.0, 1e-15);
    EXPECT_NEAR(ba.loa_low, -1.96, 1e-12);
    EXPECT_NEAR(ba.loa_high, 1.96, 1e-12);
    ASSERT_EQ(ba.points.size(), 3u);
    EXPECT_EQ(ba.points[0], (stats::BlandAltmanPoint{1.5, 1.0}));
    EXPECT_EQ(ba.points[1], (stats::BlandAltmanPoint{4.5, -1.0}));
}

TEST(BlandAltman, MatchesOracleAndIsSymmetric) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const auto n = 2 + rng() % 40;
        auto a = random_scores(rng, n, false);
        auto b = random_scores(rng, n, false);
        auto ba = stats::bland_altman(a, b);
        auto o = oracle::bland_altman(a, b);
        EXPECT_NEAR(ba.mean_diff, o.mean_diff, 1e-12);
        EXPECT_NEAR(ba.sd_diff, o.sd, 1e-12);
        EXPECT_NEAR(ba.loa_low, o.low, 1e-12);
        EXPECT_NEAR(ba.loa_high, o.high, 1e-12);
        EXPECT_NEAR(ba.loa_high - ba.mean_diff, ba.mean_diff - ba.loa_low, 1e-12);
        auto swapped = stats::bland_altman(b, a);
        EXPECT_NEAR(swapped.mean_diff, -ba.mean_diff, 1e-12);
        EXPECT_NEAR(swapped.sd_diff, ba.sd_diff, 1e-12);
    }
}

TEST(BlandAltman, IdenticalSeriesCollapseToZero) {
    std::vector<double> a{1, 5, 3, 8};
    auto ba = stats::bland_altman(a, a);
    EXPECT_EQ(ba.mean_diff, 0.0);
    EXPECT_EQ(ba.sd_diff, 0.0);
    EXPECT_EQ(ba.loa_low, 0.0);
    EXPECT_EQ(ba.loa_high, 0.0);
}

TEST(Rescale, MapsOntoTheRange) {
    auto r = stats::rescale(std::vector<double>{0.2, 0.4, 0.3}, 0, 10);
    EXPECT_NEAR(r[0], 0.0, 1e-12);
    EXPECT_NEAR(r[1], 10.0, 1e-12);
    EXPECT_NEAR(r[2], 5.0, 1e-12);
}

const char* kCsv =
    "id,human,vice,clip\n"
    "a,1,2,0.21\n"
    "b,3,3,0.25\n"
    "c,5,7,0.31\n"
    "d,7,6,0.30\n"
    "e,9,9,0.33\n";

TEST(ScoresCsv, ParsesAndPairs) {
    auto table = stats::parse_scores_csv(kCsv);
    EXPECT_EQ(table.ids.size(), 5u);
    EXPECT_EQ(table.metric_names, (std::vector<std::string>{"vice", "clip"}));
    auto p = stats::paired(table, "clip");
    EXPECT_EQ(p.metric_name, "clip");
    EXPECT_EQ(p.metric[2], 0.31);
    try {
        stats::paired(table, "nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaError);
        EXPECT_NE(std::string(e.what()).find("'nope'"), std::string::npos);
    }
}

TEST(ScoresCsv, SchemaErrors) {
    auto code = [](std::string body) { return error_code_of([&] { stats::parse_scores_csv(body); }); };
    EXPECT_EQ(code("id,human\na,1\n"), ErrorCode::SchemaError);
    EXPECT_EQ(code("name,human,m\na,1,2\n"), ErrorCode::SchemaError);
    EXPECT_EQ(code("id,human,m\na,1\n"), ErrorCode::SchemaError);
    EXPECT_EQ(code("id,human,m\na,1,x\n"), ErrorCode::SchemaError);
    EXPECT_EQ(code("id,human,m\na,1,\n"), ErrorCode::SchemaError);
    EXPECT_EQ(code("id,human,m\na,1,2\na,2,3\n"), ErrorCode::SchemaError);
    EXPECT_EQ(code("id,human,m\na,1,inf\n"), ErrorCode::SchemaError);
}

TEST(Agreement, ReportAgreesWithOracles) {
    auto table = stats::parse_scores_csv(kCsv);
    stats::AgreementOptions opts;
    opts.permutation = true;
    opts.permutations = 200;
    auto report = stats::agreement(stats::paired(table, "clip"), opts);
    const auto& human = table.human;
    const auto& clip = table.metrics.at("clip");
    EXPECT_EQ(report.n, 5u);
    EXPECT_NEAR(report.pearson_r, oracle::pearson(clip, human), 1e-12);
    EXPECT_NEAR(report.spearman_rho, oracle::spearman(clip, human), 1e-12);
    EXPECT_TRUE(report.pearson_perm_p.has_value());
    EXPECT_TRUE(report.rescaled);
    auto scaled = stats::rescale(clip, 0, 10);
    auto o = oracle::bland_altman(scaled, human);
    EXPECT_NEAR(report.bland_altman.mean_diff, o.mean_diff, 1e-12);
    EXPECT_NEAR(report.bland_altman.loa_high, o.high, 1e-12);

    opts.rescale_metric = false;
    opts.permutation = false;
    auto raw = stats::agreement(stats::paired(table, "vice"), opts);
    EXPECT_FALSE(raw.rescaled);
    EXPECT_FALSE(raw.pearson_perm_p.has_value());
    auto o2 = oracle::bland_altman(table.metrics.at("vice"), human);
    EXPECT_NEAR(raw.bland_altman.mean_diff, o2.mean_diff, 1e-12);
}

TEST(Reporting, MarkdownAndSvg) {
    stats::AgreementReport a;
    a.metric_name = "vice";
    a.pearson_r = 0.5;
    a.spearman_rho = -0.123456;
    std::vector<stats::AgreementReport> reports{a};
    EXPECT_EQ(stats::markdown_table(reports),
              "| Model | Pearson | Spearman |\n|---|---|---|\n| vice | 0.50000 | -0.12346 |\n");

    auto ba = stats::bland_altman(std::vector<double>{2, 4, 6}, std::vector<double>{1, 5, 6});
    auto svg = stats::bland_altman_svg(ba, "vice vs human");
    EXPECT_TRUE(svg.starts_with("<svg"));
    EXPECT_NE(svg.find("class=\"mean\""), std::string::npos);
    EXPECT_NE(svg.find("class=\"loa-high\""), std::string::npos);
    EXPECT_NE(svg.find("class=\"loa-low\""), std::string::npos);
    EXPECT_NE(svg.find("1.960"), std::string::npos);
    EXPECT_NE(svg.find("-1.960"), std::string::npos);
    EXPECT_EQ(svg.find("-0.000"), std::string::npos);
    EXPECT_EQ(svg, stats::bland_altman_svg(ba, "vice vs human"));

    nlohmann::json j = ba;
    EXPECT_EQ(j.at("points").size(), 3u);
    EXPECT_EQ(j.at("points")[0], nlohmann::json::array({1.5, 1.0}));
}

} // namespace
} // namespace vice
