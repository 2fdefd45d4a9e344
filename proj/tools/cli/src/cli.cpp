// SPDX-License-Identifier: Apache-2.0
#include "vice/cli/cli.hpp"

#include "vice/backend/http.hpp"
#include "vice/backend/scripted.hpp"
#include "vice/core/error.hpp"
#include "vice/core/transcript_io.hpp"
#include "vice/ite/ite.hpp"
#include "vice/pipeline/manifest.hpp"
#include "vice/pipeline/pipeline.hpp"
#include "vice/stats/stats.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <memory>
#include <ostream>

namespace vice::cli {

namespace {

/// Bad flags or inputs; reported with exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BackendFlags {
    std::string reasoning_script;
    std::string vision_script;
    std::string record_cassette;
};

void add_backend_flags(CLI::App& cmd, BackendFlags& flags) {
    cmd.add_option("--reasoning-script", flags.reasoning_script, "Replay reasoning replies from a script file");
    cmd.add_option("--vision-script", flags.vision_script, "Replay captions and answers from a script file");
    cmd.add_option("--record-cassette", flags.record_cassette,
                   "Record every backend exchange into <dir>/reasoning.json and <dir>/vision.json");
}

/// The configured reasoning and vision backends, optionally behind recorders.
class BackendStack {
public:
    BackendStack(const BackendSettings& s, const BackendFlags& flags) {
        if (!flags.reasoning_script.empty()) {
            reasoning_ = backend::load_script(flags.reasoning_script);
        } else if (s.reasoning_script) {
            reasoning_ = backend::load_script(*s.reasoning_script);
        } else if (s.reasoning_url) {
            reasoning_ = std::make_unique<backend::ChatCompletionClient>(
                backend::ChatCompletionClient::Options{*s.reasoning_url, s.reasoning_model, s.api_key});
        } else {
            throw UsageError(
                "no reasoning backend: pass --reasoning-script, set [backends].reasoning_url or VICE_REASONING_URL");
        }
        if (!flags.vision_script.empty()) {
            vision_ = backend::load_vision_script(flags.vision_script);
        } else if (s.vision_script) {
            vision_ = backend::load_vision_script(*s.vision_script);
        } else if (s.vision_url) {
            vision_ = std::make_unique<backend::HttpVisionClient>(
                backend::HttpVisionClient::Options{*s.vision_url, s.api_key, s.inline_images});
        } else {
            throw UsageError(
                "no vision backend: pass --vision-script, set [backends].vision_url or VICE_VISION_URL");
        }
        if (!flags.record_cassette.empty()) {
            cassette_ = flags.record_cassette;
            rec_reasoning_ = std::make_unique<backend::RecordingReasoning>(*reasoning_);
            rec_vision_ = std::make_unique<backend::RecordingVision>(*vision_);
        }
    }

    backend::Backends backends() {
        if (rec_reasoning_) {
            return {*rec_reasoning_, *rec_vision_};
        }
        return {*reasoning_, *vision_};
    }

    void save_cassette() const {
        if (!rec_reasoning_) {
            return;
        }
        std::filesystem::create_directories(cassette_);
        rec_reasoning_->save(cassette_ / "reasoning.json");
        rec_vision_->save(cassette_ / "vision.json");
    }

private:
    std::unique_ptr<backend::ReasoningBackend> reasoning_;
    std::unique_ptr<backend::VisionBackend> vision_;
    std::unique_ptr<backend::RecordingReasoning> rec_reasoning_;
    std::unique_ptr<backend::RecordingVision> rec_vision_;
    std::filesystem::path cassette_;
};

backend::BackendPolicy policy_from(const BackendSettings& s) {
    backend::BackendPolicy p;
    p.timeout = s.timeout;
    p.max_retries = s.max_retries;
    return p;
}

std::optional<std::filesystem::path> opt_path(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    return std::filesystem::path(s);
}

Variant parse_variant(const std::string& s) {
    auto v = variant_from(s);
    if (!v) {
        throw UsageError(fmt::format("--variant: unknown variant '{}' (expected vice, vice5 or viceblind)", s));
    }
    return *v;
}

void require_resolvable(backend::VisionBackend& vision, const ImageRef& image, std::string_view flag) {
    if (!vision.resolvable(image)) {
        throw UsageError(fmt::format("{}: image '{}' not found", flag, image.uri));
    }
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
    std::string prompt, image, input_image, manifest, variant, config, out = "vice-out", templates;
    std::optional<std::int64_t> seed;
    int workers = 1;
    bool canonical = false;
    BackendFlags backend;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err, const Env& env) {
    const bool single = !a.prompt.empty() || !a.image.empty();
    if (a.manifest.empty() && (a.prompt.empty() || a.image.empty())) {
        throw UsageError("evaluate: provide either --manifest <file> or both --prompt <text> and --image <path>");
    }
    if (!a.manifest.empty() && single) {
        throw UsageError("evaluate: --manifest cannot be combined with --prompt/--image");
    }
    if (a.workers < 1) {
        throw UsageError(fmt::format("--workers must be >= 1, got {}", a.workers));
    }
    auto settings = load_settings(opt_path(a.config), env);
    auto cfg = settings.pipeline;
    if (!a.variant.empty()) {
        cfg = with_variant(cfg, parse_variant(a.variant));
    }
    if (a.seed) {
        cfg.seed = *a.seed;
    }
    if (!a.templates.empty()) {
        settings.templates = a.templates;
    }

    std::vector<pipeline::Job> jobs;
    if (!a.manifest.empty()) {
        jobs = pipeline::load_manifest(a.manifest);
    } else {
        pipeline::Job job;
        job.prompt.id = "prompt-1";
        job.prompt.text = a.prompt;
        job.image = ImageRef{a.image};
        if (!a.input_image.empty()) {
            job.prompt.input_image = ImageRef{a.input_image};
            job.prompt.task = TaskKind::TargetedEdit;
        }
        jobs.push_back(std::move(job));
    }

    BackendStack stack(settings.backends, a.backend);
    if (single) {
        require_resolvable(stack.backends().vision, jobs.front().image, "--image");
        if (jobs.front().prompt.input_image) {
            require_resolvable(stack.backends().vision, *jobs.front().prompt.input_image, "--input-image");
        }
    }
    std::optional<prompts::TemplateSet> custom;
    pipeline::EvalOptions options;
    options.policy = policy_from(settings.backends);
    if (settings.templates) {
        custom = prompts::TemplateSet::with_overrides(*settings.templates);
        options.templates = &*custom;
    }

    auto transcripts = pipeline::batch_evaluate(jobs, cfg, stack.backends(), a.workers, options);
    if (a.canonical) {
        for (auto& t : transcripts) {
            t = canonicalize(std::move(t));
        }
    }
    std::filesystem::create_directories(a.out);
    write_jsonl(std::filesystem::path(a.out) / "transcripts.jsonl", transcripts);
    stack.save_cassette();

    bool any_failed = false;
    fmt::print(out, "{:<24} {:>6} {:>6}  {}\n", "id", "score", "rounds", "status");
    for (const auto& t : transcripts) {
        const bool ok = t.status == TranscriptStatus::Ok;
        any_failed = any_failed || !ok;
        auto status = ok ? std::string("ok") : fmt::format("failed ({})", t.failure ? t.failure->stage : "?");
        fmt::print(out, "{:<24} {:>6} {:>6}  {}\n", t.prompt.id, ok ? fmt::format("{:.1f}", t.score.value) : "-",
                   t.rounds.size(), status);
    }
    if (any_failed) {
        for (const auto& t : transcripts) {
            if (t.failure) {
                fmt::print(err, "{}: {} failed: {}\n", t.prompt.id, t.failure->stage, t.failure->message);
            }
        }
    }
    return any_failed ? kExitJobFailed : kExitOk;
}

// ---- ite -------------------------------------------------------------------

struct IteArgs {
    std::string instruction, input_image, edited_image, out = "vice-out", config, id = "edit-1", templates;
    bool canonical = false;
    BackendFlags backend;
};

int cmd_ite(const IteArgs& a, std::ostream& out, std::ostream& err, const Env& env) {
    auto settings = load_settings(opt_path(a.config), env);
    if (!a.templates.empty()) {
        settings.templates = a.templates;
    }
    BackendStack stack(settings.backends, a.backend);
    require_resolvable(stack.backends().vision, ImageRef{a.input_image}, "--input-image");
    require_resolvable(stack.backends().vision, ImageRef{a.edited_image}, "--edited-image");

    std::optional<prompts::TemplateSet> custom;
    pipeline::EvalOptions options;
    options.policy = policy_from(settings.backends);
    if (settings.templates) {
        custom = prompts::TemplateSet::with_overrides(*settings.templates);
        options.templates = &*custom;
    }
    PromptSpec prompt;
    prompt.id = a.id;
    prompt.text = a.instruction;
    prompt.task = TaskKind::TargetedEdit;
    prompt.input_image = ImageRef{a.input_image};

    auto report = ite::evaluate_edit(prompt, ImageRef{a.input_image}, ImageRef{a.edited_image}, settings.pipeline,
                                     stack.backends(), options);
    if (a.canonical) {
        report.input_transcript = canonicalize(report.input_transcript);
        report.edited_transcript = canonicalize(report.edited_transcript);
    }
    std::filesystem::create_directories(a.out);
    nlohmann::json j = report;
    write_file_atomic(std::filesystem::path(a.out) / "ite_report.json", j.dump(2) + "\n");
    stack.save_cassette();

    fmt::print(out, "remain_violations: {}\nremoval_failures: {}\naddition_failures: {}\n",
               report.remain_violations.size(), report.removal_failures.size(), report.addition_failures.size());
    if (report.status == TranscriptStatus::Ok) {
        fmt::print(out, "score: {:.1f}\n", report.score.value);
        return kExitOk;
    }
    fmt::print(out, "status: failed ({})\n", report.failure->stage);
    fmt::print(err, "ite failed at {}: {}\n", report.failure->stage, report.failure->message);
    return kExitJobFailed;
}

// ---- correlate -------------------------------------------------------------

struct CorrelateArgs {
    std::string scores, out = "vice-out", config;
    std::vector<std::string> metrics;
    bool permutation = false;
    bool no_rescale = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> permutations;
};

std::string file_safe(std::string_view name) {
    std::string out;
    for (char c : name) {
        const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        out.push_back(keep ? c : '_');
    }
    return out;
}

int cmd_correlate(const CorrelateArgs& a, std::ostream& out, std::ostream&, const Env& env) {
    auto settings = load_settings(opt_path(a.config), env);
    auto st = settings.stats;
    if (a.permutation) st.permutation = true;
    if (a.no_rescale) st.rescale = false;
    if (a.seed) st.seed = *a.seed;
    if (a.permutations) st.permutations = *a.permutations;

    const auto table = stats::parse_scores_csv(read_file(a.scores));
    const auto metrics = a.metrics.empty() ? table.metric_names : a.metrics;
    std::vector<stats::AgreementReport> reports;
    for (const auto& m : metrics) {
        stats::AgreementOptions options{st.rescale, st.permutation, st.permutations, st.seed};
        reports.push_back(stats::agreement(stats::paired(table, m), options));
    }

    const std::filesystem::path dir(a.out);
    std::filesystem::create_directories(dir);
    const auto md = stats::markdown_table(reports);
    write_file_atomic(dir / "table.md", md);
    nlohmann::json j = {{"reports", reports}};
    write_file_atomic(dir / "agreement.json", j.dump(2) + "\n");
    for (const auto& r : reports) {
        write_file_atomic(dir / fmt::format("bland_altman_{}.svg", file_safe(r.metric_name)),
                          stats::bland_altman_svg(r.bland_altman, fmt::format("Bland-Altman: {} vs human", r.metric_name)));
    }
    out << md;
    return kExitOk;
}

// ---- check-backends --------------------------------------------------------

struct CheckArgs {
    std::string config;
    std::optional<int> budget_ms;
    BackendFlags backend;
};

int cmd_check_backends(const CheckArgs& a, std::ostream& out, std::ostream& err, const Env& env) {
    auto settings = load_settings(opt_path(a.config), env);
    auto& b = settings.backends;
    if (a.budget_ms) {
        b.latency_budget = std::chrono::milliseconds(*a.budget_ms);
    }
    if (!a.backend.reasoning_script.empty()) b.reasoning_script = a.backend.reasoning_script;
    if (!a.backend.vision_script.empty()) b.vision_script = a.backend.vision_script;

    backend::BackendPolicy policy;
    policy.timeout = b.latency_budget;
    policy.max_retries = 0;
    bool all_ok = true;

    auto report = [&](std::string_view role, std::string_view where, std::optional<std::int64_t> ms, bool ok,
                      const std::string& detail) {
        all_ok = all_ok && ok;
        fmt::print(out, "{:<10} {:<40} {:>8}  {}\n", role, where, ms ? fmt::format("{}ms", *ms) : "-",
                   ok ? std::string("ok") : "fail: " + detail);
    };
    auto timed = [&](std::string_view role, std::string_view where, auto&& probe) {
        const auto start = std::chrono::steady_clock::now();
        try {
            probe();
        } catch (const Error& e) {
            auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
            auto detail = e.code() == ErrorCode::Timeout
                              ? fmt::format("latency budget exceeded ({}ms)", b.latency_budget.count())
                              : std::string(e.what());
            report(role, where, ms.count(), false, detail);
            return;
        } catch (const std::exception& e) {
            auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
            report(role, where, ms.count(), false, e.what());
            return;
        }
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
        if (ms > b.latency_budget) {
            report(role, where, ms.count(), false,
                   fmt::format("latency budget exceeded ({}ms)", b.latency_budget.count()));
        } else {
            report(role, where, ms.count(), true, "");
        }
    };

    if (b.reasoning_script) {
        timed("reasoning", "script:" + b.reasoning_script->string(), [&] { backend::load_script(*b.reasoning_script); });
    } else if (b.reasoning_url) {
        backend::ChatCompletionClient client({*b.reasoning_url, b.reasoning_model, b.api_key});
        std::vector<backend::ChatMessage> probe{{backend::Role::User, "Reply with the single word OK."}};
        timed("reasoning", *b.reasoning_url, [&] { client.complete(probe, policy); });
    } else {
        report("reasoning", "(unset)", std::nullopt, false, "VICE_REASONING_URL is not set");
    }

    if (b.vision_script) {
        timed("vision", "script:" + b.vision_script->string(), [&] { backend::load_vision_script(*b.vision_script); });
    } else if (b.vision_url) {
        backend::HttpVisionClient client({*b.vision_url, b.api_key, b.inline_images});
        timed("vision", *b.vision_url, [&] { client.health(policy); });
    } else {
        report("vision", "(unset)", std::nullopt, false, "VICE_VISION_URL is not set");
    }

    if (!all_ok) {
        fmt::print(err, "check-backends: at least one backend is not usable\n");
    }
    return all_ok ? kExitOk : kExitUsage;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Env& env) {
    CLI::App app{"Reference-free evaluation of text-to-image generations and targeted edits", "vice"};
    app.require_subcommand(1);

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate one prompt/image pair or a batch manifest");
    evaluate->add_option("--prompt", ev.prompt, "Prompt text");
    evaluate->add_option("--image", ev.image, "Image to evaluate");
    evaluate->add_option("--input-image", ev.input_image, "Original image; makes --prompt an edit instruction");
    evaluate->add_option("--manifest", ev.manifest, "CSV or JSONL manifest of jobs");
    evaluate->add_option("--variant", ev.variant, "vice | vice5 | viceblind");
    evaluate->add_option("--config", ev.config, "TOML config file");
    evaluate->add_option("--out", ev.out, "Output directory")->capture_default_str();
    evaluate->add_option("--seed", ev.seed, "Seed recorded in every transcript");
    evaluate->add_option("--workers", ev.workers, "Concurrent pipelines")->capture_default_str();
    evaluate->add_option("--templates", ev.templates, "Directory of prompt template overrides");
    evaluate->add_flag("--canonical-timings", ev.canonical, "Write zero timings so reruns are byte-identical");
    add_backend_flags(*evaluate, ev.backend);

    IteArgs it;
    auto* ite_cmd = app.add_subcommand("ite", "Evaluate a targeted edit against the original image");
    ite_cmd->add_option("--instruction", it.instruction, "Edit instruction")->required();
    ite_cmd->add_option("--input-image", it.input_image, "Original image")->required();
    ite_cmd->add_option("--edited-image", it.edited_image, "Edited image")->required();
    ite_cmd->add_option("--out", it.out, "Output directory")->capture_default_str();
    ite_cmd->add_option("--id", it.id, "Id recorded in the report")->capture_default_str();
    ite_cmd->add_option("--config", it.config, "TOML config file");
    ite_cmd->add_option("--templates", it.templates, "Directory of prompt template overrides");
    ite_cmd->add_flag("--canonical-timings", it.canonical, "Write zero timings so reruns are byte-identical");
    add_backend_flags(*ite_cmd, it.backend);

    CorrelateArgs co;
    auto* correlate = app.add_subcommand("correlate", "Agreement of metric scores with human scores");
    correlate->add_option("--scores", co.scores, "CSV with header id,human,<metric>...")->required();
    correlate->add_option("--metrics", co.metrics, "Metric columns (default: all)");
    correlate->add_option("--out", co.out, "Output directory")->capture_default_str();
    correlate->add_option("--config", co.config, "TOML config file");
    correlate->add_flag("--permutation-p", co.permutation, "Add permutation p-values");
    correlate->add_option("--permutations", co.permutations, "Shuffles for --permutation-p");
    correlate->add_flag("--no-rescale", co.no_rescale, "Use raw metric scores in Bland-Altman");
    correlate->add_option("--seed", co.seed, "Seed for permutation p-values");

    CheckArgs ch;
    auto* check = app.add_subcommand("check-backends", "Probe the configured reasoning and vision endpoints");
    check->add_option("--config", ch.config, "TOML config file");
    check->add_option("--latency-budget-ms", ch.budget_ms, "Fail probes slower than this");
    check->add_option("--reasoning-script", ch.backend.reasoning_script, "Use a scripted reasoning backend");
    check->add_option("--vision-script", ch.backend.vision_script, "Use a scripted vision backend");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        fmt::print(err, "error: {}\n", e.what());
        out << app.help();
        return kExitUsage;
    }

    try {
        if (evaluate->parsed()) {
            return cmd_evaluate(ev, out, err, env);
        }
        if (ite_cmd->parsed()) {
            return cmd_ite(it, out, err, env);
        }
        if (correlate->parsed()) {
            return cmd_correlate(co, out, err, env);
        }
        if (check->parsed()) {
            return cmd_check_backends(ch, out, err, env);
        }
    } catch (const UsageError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitUsage;
    } catch (const Error& e) {
        fmt::print(err, "error: {}: {}\n", to_string(e.code()), e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace vice::cli
