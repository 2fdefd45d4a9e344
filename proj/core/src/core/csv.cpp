// SPDX-License-Identifier: Apache-2.0
#include "vice/core/csv.hpp"

#include "vice/core/error.hpp"

#include <algorithm>

namespace vice::csv {

std::vector<Row> parse(std::string_view body) {
    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool row_has_content = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        if (row_has_content || row.size() > 1) {
            rows.push_back(std::move(row));
        }
        row.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < body.size() && body[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            row_has_content = true;
            break;
        case ',':
            end_field();
            break;
        case '\r':
            break;
        case '\n':
            end_row();
            break;
        default:
            field.push_back(c);
            row_has_content = true;
        }
    }
    if (in_quotes) {
        fail(ErrorCode::ParseError, "CSV: unterminated quoted field");
    }
    if (row_has_content || !row.empty()) {
        end_row();
    }
    return rows;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace vice::csv
