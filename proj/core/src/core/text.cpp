// SPDX-License-Identifier: Apache-2.0
#include "vice/core/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace vice::text {

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '\'' || c == '-';
}

std::string_view find_balanced(std::string_view raw, char open, char close) {
    for (std::size_t start = raw.find(open); start != std::string_view::npos;
         start = raw.find(open, start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '[' || c == '{') {
                ++depth;
            } else if (c == ']' || c == '}') {
                if (--depth == 0) {
                    if (c == close) {
                        return raw.substr(start, i - start + 1);
                    }
                    break;
                }
            }
        }
    }
    return {};
}

} // namespace

std::string trim(std::string_view s) {
    auto b = std::find_if_not(s.begin(), s.end(), is_space);
    auto e = std::find_if_not(s.rbegin(), s.rend(), is_space).base();
    return b < e ? std::string(b, e) : std::string{};
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending = false;
    for (char c : s) {
        if (is_space(c)) {
            pending = !out.empty();
            continue;
        }
        if (pending) {
            out.push_back(' ');
            pending = false;
        }
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto nl = s.find('\n', pos);
        auto line = s.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.emplace_back(line);
        if (nl == std::string_view::npos) {
            break;
        }
        pos = nl + 1;
    }
    return lines;
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_word_char(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        out.push_back(std::move(cur));
    }
    return out;
}

std::string normalize(std::string_view s) {
    auto out = collapse_whitespace(to_lower(s));
    while (!out.empty() && (out.back() == '.' || out.back() == '?' || out.back() == '!')) {
        out.pop_back();
    }
    return trim(out);
}

std::string normalize_answer(std::string_view s) {
    static constexpr std::array<std::string_view, 3> articles{"a", "an", "the"};
    std::string out;
    for (const auto& w : words(s)) {
        if (std::find(articles.begin(), articles.end(), w) != articles.end()) {
            continue;
        }
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += w;
    }
    return out;
}

std::string as_question(std::string_view s) {
    auto out = collapse_whitespace(s);
    while (!out.empty() && (out.back() == '?' || out.back() == '.' || is_space(out.back()))) {
        out.pop_back();
    }
    if (out.empty()) {
        return out;
    }
    out.push_back('?');
    return out;
}

std::string question_key(std::string_view s) {
    return normalize(s);
}

bool starts_with_yes(std::string_view answer) {
    auto w = words(answer);
    return !w.empty() && w.front() == "yes";
}

bool starts_with_no(std::string_view answer) {
    auto w = words(answer);
    return !w.empty() && w.front() == "no";
}

std::string_view find_json_array(std::string_view raw) {
    return find_balanced(raw, '[', ']');
}

std::string_view find_json_object(std::string_view raw) {
    return find_balanced(raw, '{', '}');
}

} // namespace vice::text
