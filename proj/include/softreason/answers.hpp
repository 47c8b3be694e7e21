#ifndef SOFTREASON_ANSWERS_HPP
#define SOFTREASON_ANSWERS_HPP

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace softreason {

enum class AnswerKind { numeric, text };

/// A final answer in comparable form.
struct NormalizedAnswer {
    std::string raw;
    AnswerKind kind = AnswerKind::text;
    double number = 0.0;  // numeric kind
    std::string text;     // text kind: case-folded, trimmed, inner whitespace collapsed

    /// Canonical rendering; feeding "Answer: <canonical>" back through extract_answer is a fixed point.
    [[nodiscard]] std::string canonical() const {
        if (kind == AnswerKind::numeric) {
            return number == 0.0 ? std::string("0") : fmt::format("{}", number);
        }
        return text;
    }
};

inline constexpr std::string_view kAnswerMarker = "Answer:";
inline constexpr double kNumericRelativeTolerance = 1e-6;

/// Numbers equal iff |a-b| <= 1e-6 max(1, |a|, |b|); text compares exactly; kinds never mix.
inline bool answers_equal(const NormalizedAnswer& a, const NormalizedAnswer& b) {
    if (a.kind != b.kind) {
        return false;
    }
    if (a.kind == AnswerKind::numeric) {
        const double scale = std::max({1.0, std::abs(a.number), std::abs(b.number)});
        return std::abs(a.number - b.number) <= kNumericRelativeTolerance * scale;
    }
    return a.text == b.text;
}

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

inline bool is_edge_punct(char c) {
    constexpr std::string_view punct = ".,;:!?\"'`()[]{}<>*$";
    return punct.find(c) != std::string_view::npos;
}

inline std::string_view strip_edges(std::string_view s) {
    for (;;) {
        const auto before = s.size();
        s = trim(s);
        while (!s.empty() && is_edge_punct(s.front())) s.remove_prefix(1);
        while (!s.empty() && is_edge_punct(s.back())) s.remove_suffix(1);
        if (s.size() == before) return s;
    }
}

/// Drops commas sitting between digits ("1,250" -> "1250").
inline std::string drop_thousands_separators(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == ',' && i > 0 && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
            std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
            continue;
        }
        out.push_back(c);
    }
    return out;
}

inline std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::general);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto eol = text.find('\n', start);
        if (eol == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, eol - start));
        start = eol + 1;
    }
    return lines;
}

inline std::string fold_text(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (const char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

} // namespace detail

/// Normalizes a bare answer string. Returns nullopt when nothing is left after stripping.
///
/// Numbers parse after removing thousands separators; a leading number followed by a unit
/// word ("400 ml") is also numeric. yes/true and no/false fold to "yes"/"no".
inline std::optional<NormalizedAnswer> normalize_answer(std::string_view raw) {
    const std::string_view core = detail::strip_edges(raw);
    if (core.empty()) {
        return std::nullopt;
    }
    NormalizedAnswer out;
    out.raw = std::string(detail::trim(raw));
    const std::string digits = detail::drop_thousands_separators(core);
    if (auto v = detail::parse_number(digits)) {
        out.kind = AnswerKind::numeric;
        out.number = *v;
        return out;
    }
    const auto space = digits.find_first_of(" \t");
    if (space != std::string::npos) {
        const std::string_view head = detail::strip_edges(std::string_view(digits).substr(0, space));
        const std::string_view rest = detail::trim(std::string_view(digits).substr(space));
        const bool unit_word = !rest.empty() && std::all_of(rest.begin(), rest.end(), [](char c) {
            return std::isalpha(static_cast<unsigned char>(c)) || c == ' ' || c == '.';
        });
        if (unit_word) {
            if (auto v = detail::parse_number(head)) {
                out.kind = AnswerKind::numeric;
                out.number = *v;
                return out;
            }
        }
    }
    out.kind = AnswerKind::text;
    out.text = detail::fold_text(core);
    if (out.text == "true") out.text = "yes";
    if (out.text == "false") out.text = "no";
    return out;
}

/// Answer after the last "Answer:" marker, first non-empty line only.
inline std::optional<NormalizedAnswer> extract_answer(std::string_view text) {
    const auto pos = text.rfind(kAnswerMarker);
    if (pos == std::string_view::npos) {
        return std::nullopt;
    }
    std::string_view rest = text.substr(pos + kAnswerMarker.size());
    while (!rest.empty() && detail::is_space(rest.front())) rest.remove_prefix(1);
    const auto eol = rest.find('\n');
    if (eol != std::string_view::npos) {
        rest = rest.substr(0, eol);
    }
    return normalize_answer(rest);
}

/// Groups answers by answers_equal in order of first appearance.
inline std::vector<NormalizedAnswer> distinct_answers(const std::vector<NormalizedAnswer>& answers) {
    std::vector<NormalizedAnswer> out;
    for (const auto& a : answers) {
        const bool seen = std::any_of(out.begin(), out.end(), [&](const auto& b) { return answers_equal(a, b); });
        if (!seen) out.push_back(a);
    }
    return out;
}

} // namespace softreason

#endif // SOFTREASON_ANSWERS_HPP
