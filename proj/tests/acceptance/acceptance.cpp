// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.
#include "fuzz.hpp"
#include "goldens.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "simulator.hpp"

#include "vice/backend/scripted.hpp"
#include "vice/backend/trace.hpp"
#include "vice/cli/cli.hpp"
#include "vice/core/text.hpp"
#include "vice/core/transcript_io.hpp"
#include "vice/ite/ite.hpp"
#include "vice/pipeline/pipeline.hpp"
#include "vice/scorer/scorer.hpp"
#include "vice/stats/stats.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace vice;
using namespace vice::testing;
using nlohmann::json;

namespace {

// Tolerances and budgets.
constexpr double kOracleTolerance = 1e-12;
constexpr double kGoldenBudgetSeconds = 5.0;
constexpr double kSuiteBudgetSeconds = 60.0;
constexpr int kOraclePairs = 1000;
constexpr std::size_t kMaxOracleN = 50;
constexpr int kFuzzReplies = 10000;
constexpr int kBatchJobs = 100;
constexpr int kAntisymmetryPairs = 100;

struct Outcome {
    bool ok = true;
    std::string detail;

    void check(bool condition, std::string what) {
        if (!condition && ok) {
            ok = false;
            detail = std::move(what);
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Replay {
    Replay()
        : reasoning(backend::load_script(fixtures_dir() / "scripts" / "all.reasoning.json")),
          vision(backend::load_vision_script(fixtures_dir() / "scripts" / "all.vision.json")) {}
    backend::Backends backends() { return {*reasoning, *vision}; }
    std::unique_ptr<backend::ScriptedReasoning> reasoning;
    std::unique_ptr<backend::ScriptedVision> vision;
};

std::vector<Scenario> scenarios_of(const std::string& kind) {
    std::vector<Scenario> out;
    for (auto& s : load_scenarios(fixtures_dir() / "scenarios")) {
        if (s.kind == kind) {
            out.push_back(std::move(s));
        }
    }
    return out;
}

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / fmt::format("vice_acceptance_{}", name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::vector<std::string>& args, std::string* out = nullptr) {
    std::ostringstream o, e;
    int code = cli::run(args, o, e, [](const std::string&) { return std::optional<std::string>{}; });
    if (out != nullptr) {
        *out = o.str();
    }
    return code;
}

std::vector<std::string> script_flags() {
    return {"--reasoning-script", (fixtures_dir() / "scripts" / "all.reasoning.json").string(), "--vision-script",
            (fixtures_dir() / "scripts" / "all.vision.json").string()};
}

// ---------------------------------------------------------------------------

Outcome golden_reproducibility() {
    Outcome o;
    const auto start = Clock::now();
    auto scenarios = scenarios_of("generation");
    o.check(scenarios.size() == 3, fmt::format("expected 3 generation fixtures, found {}", scenarios.size()));
    int compared = 0;
    for (const auto& s : scenarios) {
        for (const auto& [tag, variant] : golden_variants()) {
            Replay replay;
            auto t = pipeline::evaluate(s.prompt(), s.image(), pipeline::preset(variant), replay.backends());
            auto golden = read_text(fixtures_dir() / "golden" / (s.name + "." + tag + ".jsonl"));
            o.check(serialize_record(canonicalize(t)) + "\n" == golden, s.name + "." + tag + " differs from golden");
            o.check(t.status == TranscriptStatus::Ok, s.name + "." + tag + " did not complete");
            const auto& r = t.rounds;
            if (variant == Variant::ViCE_5) {
                o.check(r.size() == 1 && r[0].questions.size() == 5, s.name + ": vice5 shape is not 5/0");
            } else if (variant == Variant::ViCE_blind) {
                o.check(r.size() == 1 && r[0].questions.size() == 15, s.name + ": viceblind shape is not 15/0");
            } else if (s.name == "cat_stairs") {
                o.check(r.size() >= 2 && r[0].questions.size() == 15, "cat_stairs: vice has no refinement round");
            }
            ++compared;
        }
    }
    const double elapsed = seconds_since(start);
    o.check(elapsed < kGoldenBudgetSeconds, fmt::format("took {:.2f}s", elapsed));
    if (o.ok) {
        o.detail = fmt::format("{} transcripts byte-identical, {:.3f}s", compared, elapsed);
    }
    return o;
}

Outcome stats_substitute() {
    Outcome o;
    std::mt19937_64 rng(20261019);
    std::uniform_real_distribution<double> real(0.0, 10.0);
    std::uniform_int_distribution<int> grade(1, 5);
    double worst = 0.0;
    int checked = 0;
    while (checked < kOraclePairs) {
        const auto n = 3 + rng() % (kMaxOracleN - 2);
        const bool ties = rng() % 2 == 0;
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = ties ? grade(rng) : real(rng);
            y[i] = ties ? grade(rng) : real(rng);
        }
        auto flat = [](const std::vector<double>& v) {
            return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
        };
        if (flat(x) || flat(y)) {
            continue;
        }
        worst = std::max(worst, std::fabs(stats::pearson(x, y).r - oracle::pearson(x, y)));
        worst = std::max(worst, std::fabs(stats::spearman(x, y).r - oracle::spearman(x, y)));
        ++checked;
    }
    o.check(worst <= kOracleTolerance, fmt::format("oracle deviation {:.3e}", worst));

    // Seeded synthetic human/metric table through the correlate command.
    auto dir = scratch_dir("correlate");
    std::mt19937_64 srng(42);
    std::normal_distribution<double> noise(0.0, 1.5);
    std::uniform_int_distribution<int> human_grade(1, 10);
    std::vector<double> human, metric;
    std::string csv = "id,human,synthetic\n";
    for (int i = 0; i < 60; ++i) {
        double h = human_grade(srng);
        double m = std::round((0.8 * h + noise(srng)) * 1000) / 1000;
        human.push_back(h);
        metric.push_back(m);
        csv += fmt::format("item-{},{},{}\n", i, h, m);
    }
    write_file_atomic(dir / "scores.csv", csv);
    std::string out;
    int code = run_cli({"correlate", "--scores", (dir / "scores.csv").string(), "--out", (dir / "out").string()}, &out);
    o.check(code == 0, "correlate exited with " + std::to_string(code));
    if (code == 0) {
        auto report = json::parse(read_text(dir / "out" / "agreement.json")).at("reports").at(0);
        const double r = oracle::pearson(metric, human);
        const double rho = oracle::spearman(metric, human);
        o.check(std::fabs(report.at("pearson_r").get<double>() - r) <= kOracleTolerance, "correlate pearson_r");
        o.check(std::fabs(report.at("spearman_rho").get<double>() - rho) <= kOracleTolerance, "correlate spearman");
        auto table = fmt::format("| Model | Pearson | Spearman |\n|---|---|---|\n| synthetic | {:.5f} | {:.5f} |\n", r, rho);
        o.check(read_text(dir / "out" / "table.md") == table, "table.md does not match the oracle numbers");
    }
    if (o.ok) {
        o.detail = fmt::format("{} pairs, max deviation {:.1e}; correlate matches oracle", checked, worst);
    }
    return o;
}

std::string eager_reply(std::span<const backend::ChatMessage> messages, int& fresh, int& decisions) {
    const auto msg = last_user(messages);
    const auto header = text::split_lines(msg).front();
    auto numbered = [&](std::string_view marker) {
        int n = std::stoi(msg.substr(msg.find(marker) + marker.size()));
        json arr = json::array();
        for (int i = 0; i < n; ++i) {
            arr.push_back({{"text", fmt::format("Novel question {}?", fresh++)}, {"target_concept_ids", {"c1"}}});
        }
        return arr.dump();
    };
    if (header == "Task: expectations") return "A cat on stairs.";
    if (header == "Task: visual concepts") return R"([{"text": "cat", "category": "Object", "origin": "Explicit"}])";
    if (header == "Task: blind questions") return numbered("exactly ");
    if (header == "Task: refinement questions") return numbered("up to ");
    if (header == "Task: final score") return "SCORE: 5\nfine";
    if (header == "Task: refinement decision") {
        ++decisions;
        return "Yes.";
    }
    throw Error(ErrorCode::UnscriptedRequest, header);
}

Outcome invariants() {
    Outcome o;
    for (int max_rounds = 0; max_rounds <= 6; ++max_rounds) {
        int fresh = 0;
        int decisions = 0;
        FnReasoning reasoning([&](auto m) { return eager_reply(m, fresh, decisions); });
        FnVision vision([](const ImageRef&, const std::string&) { return std::string("yes"); });
        auto cfg = pipeline::preset(Variant::ViCE);
        cfg.max_refine_rounds = max_rounds;
        cfg.variant = max_rounds == 3 ? Variant::ViCE : Variant::Custom;
        auto t = pipeline::evaluate({"eager", "a cat on the stairs", std::nullopt, TaskKind::Generation},
                                    ImageRef{"eager.png"}, cfg, {reasoning, vision});
        o.check(t.status == TranscriptStatus::Ok, "eager run failed");
        o.check(t.rounds.size() <= static_cast<std::size_t>(max_rounds + 1),
                fmt::format("{} rounds with max_refine_rounds={}", t.rounds.size(), max_rounds));
    }

    int orders = 0;
    for (const auto& s : scenarios_of("generation")) {
        for (const auto& [tag, variant] : golden_variants()) {
            Replay replay;
            backend::CallLog log;
            backend::TracingReasoning reasoning(*replay.reasoning, log);
            backend::TracingVision vision(*replay.vision, log);
            (void)pipeline::evaluate(s.prompt(), s.image(), pipeline::preset(variant), {reasoning, vision});
            std::optional<std::size_t> blind, vqa;
            auto records = log.records();
            for (std::size_t i = 0; i < records.size(); ++i) {
                if (!blind && records[i].detail == "Task: blind questions") blind = i;
                if (!vqa && records[i].op == "vqa") vqa = i;
            }
            o.check(blind && vqa && *blind < *vqa, s.name + "." + tag + ": visual question before blind set");
            ++orders;
        }
    }

    std::mt19937_64 rng(1234);
    int parsed = 0, rejected = 0;
    for (int i = 0; i < kFuzzReplies; ++i) {
        auto reply = fuzz_score_reply(rng);
        try {
            auto s = scorer::parse_score(reply);
            o.check(std::isfinite(s.value) && s.value >= scorer::kMinScore && s.value <= scorer::kMaxScore,
                    fmt::format("out-of-range score {} from fuzzed reply", s.value));
            ++parsed;
        } catch (const Error& e) {
            o.check(e.code() == ErrorCode::ScoreParseFailure, std::string("unexpected error: ") + e.what());
            ++rejected;
        } catch (const std::exception& e) {
            o.check(false, std::string("foreign exception: ") + e.what());
        }
    }
    if (o.ok) {
        o.detail = fmt::format("termination for max 0..6, call order on {} runs, fuzz {} parsed / {} rejected", orders,
                               parsed, rejected);
    }
    return o;
}

Outcome ite_algebra() {
    Outcome o;
    const std::vector<std::string> universe{"red motorbike", "green motorbike", "street", "helmet", "sky", "rider"};
    int assignments = 0, covers = 0, mismatches = 0;
    for (int code = 0; code < 4096; ++code) {
        ite::ConceptPartition p;
        std::set<std::string> remain, remove, add;
        bool cover = true;
        for (std::size_t i = 0; i < universe.size(); ++i) {
            const int g = (code >> (2 * i)) & 3;
            const auto& t = universe[i];
            auto make = [&](const char* prefix, std::size_t n) {
                return VisualConcept{fmt::format("{}-{}", prefix, n), t, ConceptCategory::Object,
                                     ConceptOrigin::Explicit, ConceptSource::Prompt, {}};
            };
            cover = cover && g != 0;
            if (g == 1) { p.remain.push_back(make("keep", p.remain.size() + 1)); remain.insert(t); }
            if (g == 2) { p.remove.push_back(make("remove", p.remove.size() + 1)); remove.insert(t); }
            if (g == 3) { p.add.push_back(make("add", p.add.size() + 1)); add.insert(t); }
        }
        std::set<std::string> got;
        for (const auto& c : ite::expected_concepts(p)) {
            got.insert(c.text);
        }
        mismatches += got == oracle::expected(remain, remove, add) ? 0 : 1;
        covers += cover ? 1 : 0;
        ++assignments;
    }
    o.check(mismatches == 0, fmt::format("{} mismatches", mismatches));
    o.check(covers == 729, fmt::format("{} exact covers", covers));

    Replay replay;
    backend::CallLog log;
    backend::TracingReasoning reasoning(*replay.reasoning, log);
    backend::TracingVision vision(*replay.vision, log);
    auto s = scenarios_of("edit").at(0);
    auto report =
        ite::evaluate_edit(s.prompt(), s.input_image(), s.image(), pipeline::preset(Variant::ViCE), {reasoning, vision});
    auto vqa = vision.vqa_requests();
    o.check(report.status == TranscriptStatus::Ok, "scripted edit failed");
    o.check(vqa.size() == 2 && vqa[0].first != vqa[1].first && vqa[0].second == vqa[1].second,
            "question lists sent to the two images differ");
    o.check(report.input_transcript.rounds.size() == 1 &&
                report.input_transcript.rounds[0].questions == report.edited_transcript.rounds[0].questions,
            "question ids/order differ between transcripts");

    auto sim_vision = backend::ScriptedVision::from_json(s.vision_script());
    ScenarioReasoning sim(s);
    auto same = ite::evaluate_edit(s.prompt(), s.input_image(), s.input_image(), pipeline::preset(Variant::ViCE),
                                   {sim, *sim_vision});
    o.check(same.status == TranscriptStatus::Ok && same.remain_violations.empty(),
            "identical images produced remain violations");

    std::mt19937_64 rng(7);
    const std::vector<std::string> pool{"yes", "no", "red", "green", "two", "Yes."};
    int identical_trials = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = 1 + rng() % 20;
        std::vector<Question> qs;
        std::vector<Answer> answers;
        for (std::size_t i = 0; i < n; ++i) {
            auto id = fmt::format("q0-{}", i + 1);
            std::vector<std::string> targets{report.partition.all()[rng() % report.partition.all().size()].id};
            qs.push_back({id, 0, "Question?", QuestionKind::Blind, targets});
            answers.push_back({id, pool[rng() % pool.size()], {}});
        }
        o.check(ite::analyze_edit(report.partition, qs, answers, answers).remain_violations.empty(),
                "identical answer vectors produced a remain violation");
        ++identical_trials;
    }
    if (o.ok) {
        o.detail = fmt::format("{} disjoint assignments ({} exact covers), 0 mismatches; paired design and {} identity trials",
                               assignments, covers, identical_trials);
    }
    return o;
}

Outcome bland_altman_checks() {
    Outcome o;
    std::vector<double> series{3, 1, 4, 1, 5, 9, 2, 6};
    auto same = stats::bland_altman(series, series);
    o.check(same.mean_diff == 0.0 && same.loa_low == 0.0 && same.loa_high == 0.0, "identical series not at zero");

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> real(0.0, 10.0);
    double worst = 0.0;
    for (int i = 0; i < kAntisymmetryPairs; ++i) {
        const auto n = 2 + rng() % 40;
        std::vector<double> a(n), b(n);
        for (std::size_t k = 0; k < n; ++k) {
            a[k] = real(rng);
            b[k] = real(rng);
        }
        worst = std::max(worst, std::fabs(stats::bland_altman(a, b).mean_diff + stats::bland_altman(b, a).mean_diff));
    }
    o.check(worst <= kOracleTolerance, fmt::format("antisymmetry deviation {:.3e}", worst));

    // a - b = [1, -1, 0]: mean 0, sd 1, limits +-1.96.
    auto hand = stats::bland_altman(std::vector<double>{2, 4, 6}, std::vector<double>{1, 5, 6});
    o.check(std::fabs(hand.mean_diff) <= kOracleTolerance && std::fabs(hand.sd_diff - 1.0) <= kOracleTolerance &&
                std::fabs(hand.loa_low + 1.96) <= kOracleTolerance &&
                std::fabs(hand.loa_high - 1.96) <= kOracleTolerance,
            fmt::format("fixture gave mean {} sd {} loa [{}, {}]", hand.mean_diff, hand.sd_diff, hand.loa_low,
                        hand.loa_high));
    if (o.ok) {
        o.detail = fmt::format("identity, {} antisymmetric pairs, hand fixture loa [-1.96, 1.96]", kAntisymmetryPairs);
    }
    return o;
}

Outcome batch_determinism(const fs::path& unit_tests) {
    Outcome o;
    auto scenarios = scenarios_of("generation");
    auto dir = scratch_dir("batch");
    std::string manifest = "id,prompt,image\n";
    for (int i = 0; i < kBatchJobs; ++i) {
        const auto& s = scenarios[static_cast<std::size_t>(i) % scenarios.size()];
        manifest += fmt::format("job-{:03},{},{}\n", i, s.prompt().text, s.image().uri);
    }
    write_file_atomic(dir / "jobs.csv", manifest);
    std::map<int, std::pair<std::string, std::string>> runs;
    for (int workers : {1, 8}) {
        auto out_dir = dir / fmt::format("w{}", workers);
        std::vector<std::string> args{"evaluate", "--manifest", (dir / "jobs.csv").string(), "--workers",
                                      std::to_string(workers), "--out", out_dir.string(), "--canonical-timings"};
        auto flags = script_flags();
        args.insert(args.end(), flags.begin(), flags.end());
        std::string summary;
        int code = run_cli(args, &summary);
        o.check(code == 0, fmt::format("workers={} exited with {}", workers, code));
        runs[workers] = {read_text(out_dir / "transcripts.jsonl"), summary};
    }
    o.check(runs[1].first == runs[8].first, "transcripts differ between 1 and 8 workers");
    o.check(runs[1].second == runs[8].second, "summaries differ between 1 and 8 workers");
    auto lines = text::split_lines(text::trim(runs[1].first));
    o.check(lines.size() == static_cast<std::size_t>(kBatchJobs), "wrong number of transcripts");
    for (std::size_t i = 0; i < lines.size(); ++i) {
        o.check(parse_record(lines[i]).prompt.id == fmt::format("job-{:03}", i), "transcripts not in input order");
    }

    std::vector<pipeline::Job> jobs;
    for (int i = 0; i < 3; ++i) {
        jobs.push_back({scenarios[static_cast<std::size_t>(i)].prompt(), scenarios[static_cast<std::size_t>(i)].image()});
    }
    jobs[1].image = ImageRef{"unscripted.png"};
    Replay replay;
    auto ts = pipeline::batch_evaluate(jobs, pipeline::preset(Variant::ViCE), replay.backends(), 3);
    o.check(ts[0].status == TranscriptStatus::Ok && ts[1].status == TranscriptStatus::Failed &&
                ts[2].status == TranscriptStatus::Ok,
            "failure was not isolated to the failing job");

    // Full unit suite, timed, in a private temp directory.
    double suite = 0.0;
    if (!unit_tests.empty()) {
        auto tmp = scratch_dir("suite");
        const auto start = Clock::now();
        auto cmd = fmt::format("TMPDIR='{}' '{}' --gtest_brief=1 > '{}' 2>&1", tmp.string(), unit_tests.string(),
                               (tmp / "log.txt").string());
        int rc = std::system(cmd.c_str());
        suite = seconds_since(start);
        o.check(rc == 0, "unit suite failed, see " + (tmp / "log.txt").string());
        o.check(suite < kSuiteBudgetSeconds, fmt::format("unit suite took {:.1f}s", suite));
    }
    if (o.ok) {
        o.detail = fmt::format("{} jobs identical for workers 1 and 8; failure isolated; unit suite {:.2f}s", kBatchJobs,
                               suite);
    }
    return o;
}

} // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::off);
    fs::path unit_tests = argc > 1 ? fs::path(argv[1]) : fs::path{};
    const auto start = Clock::now();

    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> criteria{
        {"golden-pipeline-reproducibility", golden_reproducibility},
        {"correlation-substitute", stats_substitute},
        {"invariant-suite", invariants},
        {"ite-set-algebra", ite_algebra},
        {"bland-altman", bland_altman_checks},
        {"batch-determinism", [&] { return batch_determinism(unit_tests); }},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.ok ? 0 : 1;
        std::cout << fmt::format("{} {}: {}\n", o.ok ? "PASS" : "FAIL", c.name, o.detail);
    }
    std::cout << fmt::format("{} of {} criteria passed in {:.2f}s\n", criteria.size() - failed, criteria.size(),
                             seconds_since(start));
    return failed == 0 ? 0 : 1;
}
