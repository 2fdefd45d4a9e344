// SPDX-License-Identifier: Apache-2.0
#include "vice/pipeline/manifest.hpp"

#include "vice/core/csv.hpp"
#include "vice/core/error.hpp"
#include "vice/core/text.hpp"
#include "vice/core/transcript_io.hpp"
#include "vice/core/validate.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <map>
#include <set>
#include <sstream>

namespace vice::pipeline {

namespace {

ImageRef resolve_image(const std::string& raw, const std::filesystem::path& base_dir) {
    if (raw.empty() || raw.starts_with("data:") || base_dir.empty()) {
        return ImageRef{raw};
    }
    std::filesystem::path p(raw);
    if (p.is_relative()) {
        std::error_code ec;
        auto candidate = base_dir / p;
        if (std::filesystem::exists(candidate, ec)) {
            return ImageRef{candidate.lexically_normal().string()};
        }
    }
    return ImageRef{raw};
}

Job make_job(const std::map<std::string, std::string>& fields, const std::filesystem::path& base_dir,
             std::size_t line) {
    auto get = [&](const char* key) -> std::string {
        auto it = fields.find(key);
        return it == fields.end() ? std::string{} : text::trim(it->second);
    };
    Job job;
    job.prompt.id = get("id");
    job.prompt.text = get("prompt");
    job.image = resolve_image(get("image"), base_dir);
    if (auto input = get("input_image"); !input.empty()) {
        job.prompt.input_image = resolve_image(input, base_dir);
    }
    if (auto task = get("task"); !task.empty()) {
        auto parsed = task_kind_from(text::to_lower(task));
        if (!parsed) {
            fail(ErrorCode::SchemaError, fmt::format("manifest line {}: unknown task '{}'", line, task));
        }
        job.prompt.task = *parsed;
    } else {
        job.prompt.task = job.prompt.input_image ? TaskKind::TargetedEdit : TaskKind::Generation;
    }
    if (job.prompt.id.empty()) {
        fail(ErrorCode::SchemaError, fmt::format("manifest line {}: missing id", line));
    }
    if (job.image.empty()) {
        fail(ErrorCode::SchemaError, fmt::format("manifest line {}: missing image", line));
    }
    if (auto v = validate_prompt(job.prompt); !v.empty()) {
        fail(ErrorCode::SchemaError, fmt::format("manifest line {}: {}", line, v.front()));
    }
    return job;
}

void check_unique_ids(const std::vector<Job>& jobs) {
    std::set<std::string> ids;
    for (const auto& j : jobs) {
        if (!ids.insert(j.prompt.id).second) {
            fail(ErrorCode::SchemaError, fmt::format("manifest: duplicate id '{}'", j.prompt.id));
        }
    }
}

} // namespace

std::vector<Job> parse_manifest_csv(std::string_view body, const std::filesystem::path& base_dir) {
    auto rows = csv::parse(body);
    if (rows.empty()) {
        fail(ErrorCode::SchemaError, "manifest: empty CSV");
    }
    const auto& header = rows.front();
    for (const char* required : {"id", "prompt", "image"}) {
        if (std::find(header.begin(), header.end(), required) == header.end()) {
            fail(ErrorCode::SchemaError, fmt::format("manifest: CSV header lacks column '{}'", required));
        }
    }
    std::vector<Job> jobs;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) {
            fail(ErrorCode::SchemaError,
                 fmt::format("manifest row {}: {} cells, header has {}", r + 1, rows[r].size(), header.size()));
        }
        std::map<std::string, std::string> fields;
        for (std::size_t c = 0; c < header.size(); ++c) {
            fields[header[c]] = rows[r][c];
        }
        jobs.push_back(make_job(fields, base_dir, r + 1));
    }
    check_unique_ids(jobs);
    return jobs;
}

std::vector<Job> parse_manifest_jsonl(std::string_view body, const std::filesystem::path& base_dir) {
    std::vector<Job> jobs;
    std::istringstream in{std::string(body)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) {
            continue;
        }
        auto parsed = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (parsed.is_discarded() || !parsed.is_object()) {
            fail(ErrorCode::SchemaError, fmt::format("manifest line {}: not a JSON object", lineno));
        }
        std::map<std::string, std::string> fields;
        for (const auto& [k, v] : parsed.items()) {
            if (v.is_string()) {
                fields[k] = v.get<std::string>();
            }
        }
        jobs.push_back(make_job(fields, base_dir, lineno));
    }
    check_unique_ids(jobs);
    return jobs;
}

std::vector<Job> load_manifest(const std::filesystem::path& path) {
    const auto body = read_file(path);
    const auto base = path.parent_path();
    const auto ext = path.extension().string();
    if (ext == ".jsonl" || ext == ".json" || (ext != ".csv" && text::trim(body).starts_with("{"))) {
        return parse_manifest_jsonl(body, base);
    }
    return parse_manifest_csv(body, base);
}

} // namespace vice::pipeline
