// SPDX-License-Identifier: Apache-2.0
#include "vice/prompts/templates.hpp"

#include "vice/core/error.hpp"
#include "vice/core/text.hpp"
#include "vice/core/transcript_io.hpp"
#include "vice/core/validate.hpp"

#include <fmt/format.h>

namespace vice::prompts {

namespace {

constexpr std::string_view kBuiltinVersion = "vice-templates/1";

std::map<std::string, std::string, std::less<>> builtin_texts() {
    return {
        {"system",
         R"(You are a meticulous evaluator of images produced by generative models. You judge how faithfully an image follows the request it was produced from, reasoning step by step the way a careful human annotator would.)"},

        {"concepts.expect",
         R"(Task: expectations
An image was generated from the following prompt:
"{{prompt}}"

Before looking at the image, describe what you expect to find in it. Include the objects, attributes, relations and context the prompt states explicitly, and those a human would implicitly assume. Then explain on what criteria the generation should be judged.)"},

        {"concepts.list",
         R"(Task: visual concepts
Now list every visual concept you expect to see as a JSON array. Each element is an object with the keys "text" (a short description), "category" (one of Object, Attribute, Relation, Context) and "origin" (Explicit if the prompt states it, Implicit if it is your inference). Reply with only the JSON array.)"},

        {"concepts.expect_edit",
         R"(Task: edit expectations
An image was edited according to the following instruction:
"{{prompt}}"

The original image is described by this caption:
"{{input_caption}}"

Before looking at the edited image, describe what you expect to find in it: what should have changed, what should have stayed the same, and on what criteria the edit should be judged.)"},

        {"concepts.list_edit",
         R"(Task: visual concepts
Now list every visual concept you expect to see in the edited image as a JSON array. Each element is an object with the keys "text", "category" (one of Object, Attribute, Relation, Context), "origin" (Explicit or Implicit) and "source" (prompt if it comes from the instruction, input_image if it comes from the original image). Reply with only the JSON array.)"},

        {"repair.json_array",
         R"(Your previous reply could not be parsed. Reply with only the JSON array, without any other text.)"},

        {"questions.blind",
         R"(Task: blind questions
Prompt: "{{prompt}}"
{{caption_block}}Expected visual concepts:
{{concepts}}

Write exactly {{n}} questions that a visual question answering model can answer by looking at the image. Together they must check the presence of the expected objects, their attributes, their relations, and the overall quality and coherence of the scene. Reply with only a JSON array of objects with the keys "text" (the question) and "target_concept_ids" (the ids of the concepts the question checks).)"},

        {"repair.question_count",
         R"(You returned {{got}} questions but exactly {{n}} are required. Reply with only a JSON array of exactly {{n}} question objects.)"},

        {"decide",
         R"(Task: refinement decision
Prompt: "{{prompt}}"
{{caption_block}}Expected visual concepts:
{{concepts}}

Questions asked so far and the answers obtained from the image:
{{history}}

Do you need further information about the image before giving your final evaluation? Answer yes or no first, then briefly say why.)"},

        {"repair.yes_no", R"(Answer with a single word: yes or no.)"},

        {"questions.refine",
         R"(Task: refinement questions
Prompt: "{{prompt}}"
{{caption_block}}Expected visual concepts:
{{concepts}}

Questions asked so far and the answers obtained from the image:
{{history}}

Write up to {{k}} new follow-up questions that clarify the aspects that are still uncertain. Do not repeat earlier questions. Reply with only a JSON array of objects with the keys "text" and "target_concept_ids".)"},

        {"score",
         R"(Task: final score
Prompt: "{{prompt}}"
{{caption_block}}Expected visual concepts:
{{concepts}}

Questions asked about the image and the answers obtained:
{{history}}

Rate from 0 to 10 how consistent the image is with the prompt. The first line of your reply must be exactly "SCORE: <number>", followed by a short rationale on the next lines.)"},

        {"repair.score",
         R"(Your reply did not start with a score line. Reply with "SCORE: <number from 0 to 10>" on the first line, followed by the rationale.)"},

        {"ite.partition",
         R"(Task: edit partition
Edit instruction: "{{instruction}}"
Caption of the original image: "{{input_caption}}"

Split the visual concepts involved into three groups: those that must remain unchanged from the original image, those that must no longer be present after the edit, and those that must be added by the edit. Reply with only a JSON object with the keys "remain", "remove" and "add", each an array of objects with the keys "text" and "category".)"},

        {"repair.partition",
         R"(Your previous reply could not be parsed. Reply with only the JSON object with the keys "remain", "remove" and "add".)"},

        {"ite.questions",
         R"(Task: edit questions
Edit instruction: "{{instruction}}"
Caption of the original image: "{{input_caption}}"
Concepts to check:
{{concepts}}

Write exactly {{n}} questions that will be asked, unchanged, about both the original and the edited image. Questions about concepts to remove or to add must be answerable with yes or no. Reply with only a JSON array of objects with the keys "text" and "target_concept_ids".)"},

        {"ite.score",
         R"(Task: edit score
Edit instruction: "{{instruction}}"
Caption of the original image: "{{input_caption}}"
Concepts:
{{concepts}}

Each question was asked about the original image and about the edited image:
{{history}}

Automatic checks: {{remain_violations}} preserved concept answer(s) changed, {{removal_failures}} concept(s) still present that should have been removed, {{addition_failures}} concept(s) missing that should have been added.

Rate from 0 to 10 how well the edited image carries out the instruction while leaving everything else unchanged. The first line of your reply must be exactly "SCORE: <number>", followed by a short rationale on the next lines.)"},
    };
}

} // namespace

const TemplateSet& TemplateSet::builtin() {
    static const TemplateSet set(std::string(kBuiltinVersion), builtin_texts());
    return set;
}

TemplateSet TemplateSet::with_overrides(const std::filesystem::path& dir) {
    require(std::filesystem::is_directory(dir), fmt::format("template directory '{}' does not exist", dir.string()));
    auto texts = builtin_texts();
    std::string concatenated;
    for (auto& [name, body] : texts) {
        const auto file = dir / (name + ".txt");
        if (std::filesystem::is_regular_file(file)) {
            body = read_file(file);
            while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) {
                body.pop_back();
            }
            concatenated += name;
            concatenated.push_back('\0');
            concatenated += body;
            concatenated.push_back('\0');
        }
    }
    std::string version;
    if (std::filesystem::is_regular_file(dir / "VERSION")) {
        version = text::trim(read_file(dir / "VERSION"));
    }
    if (version.empty()) {
        version = fmt::format("{}+custom-{}", kBuiltinVersion, sha256_hex(concatenated).substr(0, 12));
    }
    return TemplateSet(std::move(version), std::move(texts));
}

const std::string& TemplateSet::text(std::string_view name) const {
    auto it = texts_.find(name);
    require(it != texts_.end(), fmt::format("unknown template '{}'", name));
    return it->second;
}

std::string TemplateSet::render(std::string_view name, const std::map<std::string, std::string>& vars) const {
    const auto& tpl = text(name);
    std::string out;
    out.reserve(tpl.size() + 256);
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        const auto open = tpl.find("{{", pos);
        if (open == std::string::npos) {
            out.append(tpl, pos);
            break;
        }
        const auto close = tpl.find("}}", open + 2);
        require(close != std::string::npos, fmt::format("template '{}' has an unterminated placeholder", name));
        out.append(tpl, pos, open - pos);
        const auto key = tpl.substr(open + 2, close - open - 2);
        auto it = vars.find(key);
        require(it != vars.end(), fmt::format("template '{}' needs a value for '{}'", name, key));
        out += it->second;
        pos = close + 2;
    }
    return out;
}

} // namespace vice::prompts
