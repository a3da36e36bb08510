#include "cqforge/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace cqforge {

namespace {

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string normalize_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_run = false;
    for (char ch : s) {
        if (is_space(static_cast<unsigned char>(ch))) {
            in_run = true;
            continue;
        }
        if (in_run && !out.empty()) out.push_back(' ');
        in_run = false;
        out.push_back(ch);
    }
    return out;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    });
    return out;
}

std::vector<std::string> alnum_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : s) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                                     : ch);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

double token_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::set<std::string> sa(a.begin(), a.end());
    std::set<std::string> sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.count(t);
    const std::size_t uni = sa.size() + sb.size() - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t state) {
    constexpr std::uint64_t kPrime = 1099511628211ull;
    for (unsigned char c : s) {
        state ^= c;
        state *= kPrime;
    }
    return state;
}

std::uint64_t fnv1a64(std::string_view s) {
    constexpr std::uint64_t kOffset = 14695981039346656037ull;
    return fnv1a64(s, kOffset);
}

std::string to_hex(std::uint64_t v) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    if (n == 0) return m;
    if (m == 0) return n;
    std::vector<std::size_t> prev(m + 1);
    std::vector<std::size_t> cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

std::string strip_list_marker(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && is_space(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t marker_end = i;

    auto is_digit = [&](std::size_t p) {
        return p < line.size() && std::isdigit(static_cast<unsigned char>(line[p]));
    };

    if (is_digit(i)) {
        // "12." or "12)"
        std::size_t p = i;
        while (is_digit(p)) ++p;
        if (p < line.size() && (line[p] == '.' || line[p] == ')')) marker_end = p + 1;
    } else if (i < line.size() && (line[i] == '-' || line[i] == '*')) {
        marker_end = i + 1;
    } else if (i + 2 < line.size() && static_cast<unsigned char>(line[i]) == 0xE2 &&
               static_cast<unsigned char>(line[i + 1]) == 0x80 &&
               static_cast<unsigned char>(line[i + 2]) == 0xA2) {
        marker_end = i + 3;  // U+2022 bullet
    } else if (i < line.size() && line[i] == 'Q' && is_digit(i + 1)) {
        std::size_t p = i + 1;
        while (is_digit(p)) ++p;
        if (p < line.size() && line[p] == ':') marker_end = p + 1;
    }

    if (marker_end == i) return std::string(line.substr(i));
    while (marker_end < line.size() && is_space(static_cast<unsigned char>(line[marker_end])))
        ++marker_end;
    return std::string(line.substr(marker_end));
}

}  // namespace cqforge
