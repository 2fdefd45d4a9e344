// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/core/types.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vice {

void to_json(nlohmann::json& j, const ImageRef& v);
void to_json(nlohmann::json& j, const PromptSpec& v);
void to_json(nlohmann::json& j, const VisualConcept& v);
void to_json(nlohmann::json& j, const Question& v);
void to_json(nlohmann::json& j, const Answer& v);
void to_json(nlohmann::json& j, const Round& v);
void to_json(nlohmann::json& j, const EvaluationScore& v);
void to_json(nlohmann::json& j, const PipelineConfig& v);
void to_json(nlohmann::json& j, const Transcript& v);

void from_json(const nlohmann::json& j, ImageRef& v);
void from_json(const nlohmann::json& j, PromptSpec& v);
void from_json(const nlohmann::json& j, VisualConcept& v);
void from_json(const nlohmann::json& j, Question& v);
void from_json(const nlohmann::json& j, Answer& v);
void from_json(const nlohmann::json& j, Round& v);
void from_json(const nlohmann::json& j, EvaluationScore& v);
void from_json(const nlohmann::json& j, PipelineConfig& v);
void from_json(const nlohmann::json& j, Transcript& v);

/// One JSONL record (no trailing newline). Keys are emitted in sorted order,
/// so equal transcripts serialize to identical bytes.
std::string serialize_record(const Transcript& t);

/// Parses one record. Unknown fields are ignored. Structural violations
/// (an ok transcript without rounds, missing required keys) raise SchemaError;
/// malformed bytes raise ParseError.
Transcript parse_record(std::string_view line);

Transcript roundtrip_serialize(const Transcript& t);

/// Zeroes wall-clock dependent values (stage timings, per-answer latency) so
/// that transcripts can be compared byte-for-byte.
Transcript canonicalize(Transcript t);

std::vector<Transcript> read_jsonl(const std::filesystem::path& path);

/// Writes atomically: a sibling temporary file is renamed over `path`.
void write_jsonl(const std::filesystem::path& path, const std::vector<Transcript>& records);

void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

} // namespace vice
