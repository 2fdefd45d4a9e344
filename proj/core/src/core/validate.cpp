// SPDX-License-Identifier: Apache-2.0
#include "vice/core/validate.hpp"

#include "vice/core/error.hpp"
#include "vice/core/text.hpp"
#include "vice/core/transcript_io.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <memory>
#include <set>
#include <unordered_map>

namespace vice {

std::vector<std::string> validate_prompt(const PromptSpec& p) {
    std::vector<std::string> out;
    if (text::trim(p.text).empty()) {
        out.push_back("prompt text is empty");
    }
    const bool is_edit = p.task == TaskKind::TargetedEdit;
    if (is_edit && !p.input_image) {
        out.push_back("targeted edit prompt has no input image");
    }
    if (!is_edit && p.input_image) {
        out.push_back("generation prompt carries an input image");
    }
    return out;
}

std::vector<std::string> validate_config(const PipelineConfig& cfg) {
    std::vector<std::string> out;
    if (cfg.n_blind < 1) {
        out.push_back(fmt::format("n_blind must be >= 1, got {}", cfg.n_blind));
    }
    if (cfg.n_refine_per_round < 1) {
        out.push_back(fmt::format("n_refine_per_round must be >= 1, got {}", cfg.n_refine_per_round));
    }
    if (cfg.max_refine_rounds < 0) {
        out.push_back(fmt::format("max_refine_rounds must be >= 0, got {}", cfg.max_refine_rounds));
    }
    if (cfg.repair_retries < 0) {
        out.push_back(fmt::format("repair_retries must be >= 0, got {}", cfg.repair_retries));
    }
    if (!std::isfinite(cfg.temperature) || cfg.temperature < 0) {
        out.push_back("temperature must be a finite number >= 0");
    }
    switch (cfg.variant) {
    case Variant::ViCE:
        if (cfg.n_blind != 15 || cfg.max_refine_rounds < 1 || !cfg.use_caption) {
            out.push_back("variant ViCE requires n_blind=15, max_refine_rounds>=1, use_caption=true");
        }
        break;
    case Variant::ViCE_5:
        if (cfg.n_blind != 5 || cfg.max_refine_rounds != 0) {
            out.push_back("variant ViCE_5 requires n_blind=5, max_refine_rounds=0");
        }
        break;
    case Variant::ViCE_blind:
        if (cfg.n_blind != 15 || cfg.max_refine_rounds != 0) {
            out.push_back("variant ViCE_blind requires n_blind=15, max_refine_rounds=0");
        }
        break;
    case Variant::Custom:
        break;
    }
    return out;
}

std::vector<std::string> validate_transcript(const Transcript& t, const PipelineConfig& cfg) {
    std::vector<std::string> out;
    auto add = [&out](std::string s) { out.push_back(std::move(s)); };

    if (t.status == TranscriptStatus::Failed) {
        add(fmt::format("transcript failed at stage '{}'",
                        t.failure ? t.failure->stage : std::string("unknown")));
    }
    for (auto& v : validate_prompt(t.prompt)) {
        add(std::move(v));
    }
    if (t.image.empty()) {
        add("image reference is empty");
    }

    std::set<std::string> concept_ids;
    for (const auto& c : t.concepts) {
        if (text::trim(c.text).empty()) {
            add(fmt::format("concept '{}' has empty text", c.id));
        }
        if (!concept_ids.insert(c.id).second) {
            add(fmt::format("concept id '{}' is not unique", c.id));
        }
    }

    if (t.rounds.empty()) {
        add("transcript has no rounds");
    }

    std::unordered_map<std::string, int> question_ids;
    for (std::size_t r = 0; r < t.rounds.size(); ++r) {
        const auto& round = t.rounds[r];
        if (round.index != static_cast<int>(r)) {
            add(fmt::format("round at position {} has index {}", r, round.index));
        }
        if (r == 0 && static_cast<int>(round.questions.size()) != cfg.n_blind) {
            add(fmt::format("round 0 has {} questions, expected {}", round.questions.size(), cfg.n_blind));
        }
        for (const auto& q : round.questions) {
            if (++question_ids[q.id] > 1) {
                add(fmt::format("question id '{}' is not unique", q.id));
            }
            if (q.round != round.index) {
                add(fmt::format("question '{}' has round {} inside round {}", q.id, q.round, round.index));
            }
            if ((q.kind == QuestionKind::Blind) != (q.round == 0)) {
                add(fmt::format("question '{}' is {} in round {}", q.id, to_string(q.kind), q.round));
            }
            if (r == 0 && q.kind != QuestionKind::Blind) {
                add(fmt::format("round 0 question '{}' is not blind", q.id));
            }
            if (r > 0 && q.kind != QuestionKind::Refinement) {
                add(fmt::format("round {} question '{}' is not a refinement question", r, q.id));
            }
            if (q.text.empty() || q.text.back() != '?') {
                add(fmt::format("question '{}' does not end with '?'", q.id));
            }
            for (const auto& target : q.target_concepts) {
                if (!concept_ids.contains(target)) {
                    add(fmt::format("question '{}' targets unknown concept '{}'", q.id, target));
                }
            }
        }
        if (round.answers.size() != round.questions.size()) {
            add(fmt::format("round {} has {} answers for {} questions", r, round.answers.size(),
                            round.questions.size()));
        }
        std::multiset<std::string> in_round;
        for (const auto& q : round.questions) {
            in_round.insert(q.id);
        }
        std::set<std::string> answered;
        for (const auto& a : round.answers) {
            if (in_round.count(a.question_id) != 1) {
                add(fmt::format("answer in round {} refers to unknown question '{}'", r, a.question_id));
            } else if (!answered.insert(a.question_id).second) {
                add(fmt::format("question '{}' is answered more than once", a.question_id));
            }
        }
    }

    if (!t.rounds.empty()) {
        const auto refine_rounds = static_cast<int>(t.rounds.size()) - 1;
        if (refine_rounds > cfg.max_refine_rounds) {
            add(fmt::format("{} refinement rounds exceed max_refine_rounds={}", refine_rounds,
                            cfg.max_refine_rounds));
        }
        const auto& last = t.rounds.back();
        if (last.decision_after != Decision::Stop) {
            add(fmt::format("round {} is the last round but its decision_after is Refine", last.index));
        }
    }

    if (!std::isfinite(t.score.value) || t.score.value < 0.0 || t.score.value > 10.0) {
        add(fmt::format("score {} is outside [0, 10]", t.score.value));
    }
    return out;
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
        fail(ErrorCode::IoError, "sha256 digest failed");
    }
    std::string hex;
    hex.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        fmt::format_to(std::back_inserter(hex), "{:02x}", md[i]);
    }
    return hex;
}

std::string fingerprint_config(const PipelineConfig& cfg, std::string_view template_set_version) {
    nlohmann::json canonical = cfg;
    canonical["template_set_version"] = template_set_version;
    return sha256_hex(canonical.dump());
}

} // namespace vice
