// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/pipeline/pipeline.hpp"

#include <filesystem>
#include <string_view>
#include <vector>

namespace vice::pipeline {

/// Batch manifest, CSV (header row) or JSONL (one object per line), with
/// fields id, prompt, image and optionally input_image and task
/// ("generation" | "targeted_edit"; inferred from input_image when absent).
/// Relative image paths that exist next to the manifest are resolved against
/// its directory; anything else is kept verbatim.
std::vector<Job> load_manifest(const std::filesystem::path& path);

std::vector<Job> parse_manifest_csv(std::string_view body, const std::filesystem::path& base_dir = {});
std::vector<Job> parse_manifest_jsonl(std::string_view body, const std::filesystem::path& base_dir = {});

} // namespace vice::pipeline
