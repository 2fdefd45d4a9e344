// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vice/core/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace vice {

/// Checks every structural invariant of a transcript against the config it
/// was produced under. Returns one human-readable line per violation, in a
/// deterministic order; an empty list means the transcript is valid.
std::vector<std::string> validate_transcript(const Transcript& t, const PipelineConfig& cfg);

/// Config invariants (variant presets, lower bounds).
std::vector<std::string> validate_config(const PipelineConfig& cfg);

std::vector<std::string> validate_prompt(const PromptSpec& p);

/// SHA-256 over a canonical rendering of every config field plus the
/// template-set version. Lowercase hex.
std::string fingerprint_config(const PipelineConfig& cfg, std::string_view template_set_version);

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

} // namespace vice
