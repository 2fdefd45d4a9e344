// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vice::csv {

using Row = std::vector<std::string>;

/// RFC 4180 style: comma separated, double-quoted fields may contain commas,
/// newlines and doubled quotes. Blank lines are skipped. Throws ParseError on
/// an unterminated quote.
std::vector<Row> parse(std::string_view body);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

} // namespace vice::csv
