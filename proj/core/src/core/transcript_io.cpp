// SPDX-License-Identifier: Apache-2.0
#include "vice/core/transcript_io.hpp"

#include "vice/core/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>
#include <system_error>

namespace vice {

using nlohmann::json;

namespace {

template <typename T, typename Parse>
T enum_field(const json& j, const char* key, Parse parse) {
    const auto& raw = j.at(key).get_ref<const std::string&>();
    auto value = parse(raw);
    if (!value) {
        fail(ErrorCode::SchemaError, fmt::format("unknown value '{}' for field '{}'", raw, key));
    }
    return *value;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    return it->get<T>();
}

} // namespace

void to_json(json& j, const ImageRef& v) { j = v.uri; }
void from_json(const json& j, ImageRef& v) { v.uri = j.get<std::string>(); }

void to_json(json& j, const PromptSpec& v) {
    j = json{{"id", v.id},
             {"text", v.text},
             {"input_image", optional_json(v.input_image)},
             {"task", to_string(v.task)}};
}

void from_json(const json& j, PromptSpec& v) {
    v.id = j.at("id").get<std::string>();
    v.text = j.at("text").get<std::string>();
    v.input_image = optional_field<ImageRef>(j, "input_image");
    v.task = enum_field<TaskKind>(j, "task", task_kind_from);
}

void to_json(json& j, const VisualConcept& v) {
    j = json{{"id", v.id},
             {"text", v.text},
             {"category", to_string(v.category)},
             {"origin", to_string(v.origin)},
             {"source", to_string(v.source)},
             {"span", optional_json(v.span)}};
}

void from_json(const json& j, VisualConcept& v) {
    v.id = j.at("id").get<std::string>();
    v.text = j.at("text").get<std::string>();
    v.category = enum_field<ConceptCategory>(j, "category", category_from);
    v.origin = enum_field<ConceptOrigin>(j, "origin", origin_from);
    v.source = j.contains("source") ? enum_field<ConceptSource>(j, "source", source_from)
                                    : ConceptSource::Prompt;
    v.span = optional_field<std::string>(j, "span");
}

void to_json(json& j, const Question& v) {
    j = json{{"id", v.id},
             {"round", v.round},
             {"text", v.text},
             {"kind", to_string(v.kind)},
             {"target_concepts", v.target_concepts}};
}

void from_json(const json& j, Question& v) {
    v.id = j.at("id").get<std::string>();
    v.round = j.at("round").get<int>();
    v.text = j.at("text").get<std::string>();
    v.kind = enum_field<QuestionKind>(j, "kind", question_kind_from);
    v.target_concepts = j.value("target_concepts", std::vector<std::string>{});
}

void to_json(json& j, const Answer& v) {
    j = json{{"question_id", v.question_id}, {"text", v.text}, {"backend_meta", v.backend_meta}};
}

void from_json(const json& j, Answer& v) {
    v.question_id = j.at("question_id").get<std::string>();
    v.text = j.at("text").get<std::string>();
    v.backend_meta = j.value("backend_meta", std::map<std::string, std::string>{});
}

void to_json(json& j, const Round& v) {
    j = json{{"index", v.index},
             {"questions", v.questions},
             {"answers", v.answers},
             {"decision_after", to_string(v.decision_after)}};
}

void from_json(const json& j, Round& v) {
    v.index = j.at("index").get<int>();
    v.questions = j.at("questions").get<std::vector<Question>>();
    v.answers = j.at("answers").get<std::vector<Answer>>();
    v.decision_after = enum_field<Decision>(j, "decision_after", decision_from);
}

void to_json(json& j, const EvaluationScore& v) {
    j = json{{"value", v.value},
             {"rationale", v.rationale},
             {"raw_model_output", v.raw_model_output},
             {"clamped", v.clamped},
             {"repairs", v.repairs}};
}

void from_json(const json& j, EvaluationScore& v) {
    v.value = j.at("value").get<double>();
    v.rationale = j.value("rationale", std::string{});
    v.raw_model_output = j.value("raw_model_output", std::string{});
    v.clamped = j.value("clamped", false);
    v.repairs = j.value("repairs", 0);
}

void to_json(json& j, const PipelineConfig& v) {
    j = json{{"variant", to_string(v.variant)},
             {"n_blind", v.n_blind},
             {"n_refine_per_round", v.n_refine_per_round},
             {"max_refine_rounds", v.max_refine_rounds},
             {"use_caption", v.use_caption},
             {"temperature", v.temperature},
             {"seed", v.seed},
             {"repair_retries", v.repair_retries},
             {"ite_refine", v.ite_refine}};
}

void from_json(const json& j, PipelineConfig& v) {
    PipelineConfig d;
    v.variant = j.contains("variant") ? enum_field<Variant>(j, "variant", variant_from) : d.variant;
    v.n_blind = j.value("n_blind", d.n_blind);
    v.n_refine_per_round = j.value("n_refine_per_round", d.n_refine_per_round);
    v.max_refine_rounds = j.value("max_refine_rounds", d.max_refine_rounds);
    v.use_caption = j.value("use_caption", d.use_caption);
    v.temperature = j.value("temperature", d.temperature);
    v.seed = j.value("seed", d.seed);
    v.repair_retries = j.value("repair_retries", d.repair_retries);
    v.ite_refine = j.value("ite_refine", d.ite_refine);
}

void to_json(json& j, const Transcript& v) {
    json failure = nullptr;
    if (v.failure) {
        failure = json{{"stage", v.failure->stage}, {"message", v.failure->message}};
    }
    j = json{{"prompt", v.prompt},
             {"image", v.image},
             {"caption", optional_json(v.caption)},
             {"concepts", v.concepts},
             {"rounds", v.rounds},
             {"score", v.score},
             {"config_fingerprint", v.config_fingerprint},
             {"seed", v.seed},
             {"timings", v.timings},
             {"status", to_string(v.status)},
             {"failure", failure},
             {"metadata", v.metadata}};
}

void from_json(const json& j, Transcript& v) {
    v.prompt = j.at("prompt").get<PromptSpec>();
    v.image = j.at("image").get<ImageRef>();
    v.caption = optional_field<std::string>(j, "caption");
    v.concepts = j.at("concepts").get<std::vector<VisualConcept>>();
    v.rounds = j.at("rounds").get<std::vector<Round>>();
    v.score = j.at("score").get<EvaluationScore>();
    v.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    v.seed = j.value("seed", std::int64_t{0});
    v.timings = j.value("timings", std::map<std::string, std::int64_t>{});
    v.status = j.contains("status") ? enum_field<TranscriptStatus>(j, "status", status_from)
                                    : TranscriptStatus::Ok;
    v.failure.reset();
    if (auto it = j.find("failure"); it != j.end() && !it->is_null()) {
        v.failure = StageFailure{it->at("stage").get<std::string>(),
                                 it->at("message").get<std::string>()};
    }
    v.metadata = j.value("metadata", std::map<std::string, std::string>{});
}

std::string serialize_record(const Transcript& t) {
    return json(t).dump(-1, ' ', false, json::error_handler_t::replace);
}

Transcript parse_record(std::string_view line) {
    auto parsed = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded() || !parsed.is_object()) {
        fail(ErrorCode::ParseError, "transcript record is not a JSON object");
    }
    Transcript t;
    try {
        t = parsed.get<Transcript>();
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaError, fmt::format("transcript record: {}", e.what()));
    }
    if (t.status == TranscriptStatus::Ok && t.rounds.empty()) {
        fail(ErrorCode::SchemaError, "transcript record: status ok but rounds list is empty");
    }
    return t;
}

Transcript roundtrip_serialize(const Transcript& t) {
    return parse_record(serialize_record(t));
}

Transcript canonicalize(Transcript t) {
    for (auto& [stage, ms] : t.timings) {
        ms = 0;
    }
    for (auto& round : t.rounds) {
        for (auto& answer : round.answers) {
            if (auto it = answer.backend_meta.find("latency_ms"); it != answer.backend_meta.end()) {
                it->second = "0";
            }
        }
    }
    return t;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorCode::IoError, fmt::format("cannot write '{}'", tmp.string()));
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            fail(ErrorCode::IoError, fmt::format("short write to '{}'", tmp.string()));
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        fail(ErrorCode::IoError, fmt::format("rename to '{}': {}", path.string(), ec.message()));
    }
}

std::vector<Transcript> read_jsonl(const std::filesystem::path& path) {
    std::vector<Transcript> out;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(parse_record(line));
        } catch (const Error& e) {
            throw Error(e.code(), fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
        }
    }
    return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Transcript>& records) {
    std::string body;
    for (const auto& t : records) {
        body += serialize_record(t);
        body.push_back('\n');
    }
    write_file_atomic(path, body);
}

} // namespace vice
