// SPDX-License-Identifier: Apache-2.0
#include "vice/prompts/render.hpp"

#include <fmt/format.h>

#include <map>

namespace vice::prompts {

std::string render_concepts(std::span<const VisualConcept> concepts) {
    std::string out;
    for (const auto& c : concepts) {
        if (!out.empty()) {
            out.push_back('\n');
        }
        out += fmt::format("- {} [{}, {}] {}", c.id, to_string(c.category), to_string(c.origin), c.text);
    }
    return out;
}

std::string render_history(std::span<const Round> rounds) {
    std::string out;
    for (const auto& round : rounds) {
        std::map<std::string, const Answer*> answers;
        for (const auto& a : round.answers) {
            answers.emplace(a.question_id, &a);
        }
        if (!out.empty()) {
            out.push_back('\n');
        }
        out += fmt::format("Round {} ({} questions):", round.index, round.index == 0 ? "blind" : "refinement");
        for (const auto& q : round.questions) {
            auto it = answers.find(q.id);
            if (it != answers.end()) {
                out += fmt::format("\n- [{}] {} -> {}", q.id, q.text, it->second->text);
            } else {
                out += fmt::format("\n- [{}] {}", q.id, q.text);
            }
        }
    }
    return out;
}

std::string caption_block(const std::optional<std::string>& caption) {
    if (!caption) {
        return {};
    }
    return fmt::format("Caption of the image under evaluation: \"{}\"\n", *caption);
}

} // namespace vice::prompts
