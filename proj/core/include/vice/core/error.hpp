// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vice {

enum class ErrorCode {
    InvalidArgument,
    ParseError,
    SchemaError,
    IoError,
    // backend
    Timeout,
    TransportFailure,
    MalformedResponse,
    ScriptParseError,
    UnscriptedRequest,
    // reasoning stages
    ConceptParseFailure,
    NoJsonArrayFound,
    ElementMissingText,
    QuestionCountShortfall,
    NoNewQuestions,
    ScoreParseFailure,
    PartitionParseFailure,
    DisjointnessViolation,
    // stats
    DegenerateInput,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw Error(ErrorCode::InvalidArgument, message);
    }
}

} // namespace vice
