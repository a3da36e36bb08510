#include "cqforge/toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "cqforge/error.hpp"
#include "cqforge/text.hpp"

namespace cqforge {

namespace {

struct LineError {
    const std::string& source;
    std::size_t line_no;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(source + ":" + std::to_string(line_no) + ": " + what);
    }
};

// Cut a trailing comment, honoring quoted strings.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

bool valid_bare_key(const std::string& key) {
    if (key.empty()) return false;
    for (char c : key)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
            return false;
    return true;
}

std::string parse_basic_string(const std::string& text, std::size_t& pos,
                               const LineError& at) {
    std::string out;
    ++pos;  // opening quote
    while (pos < text.size()) {
        const char c = text[pos];
        if (c == '"') {
            ++pos;
            return out;
        }
        if (c == '\\') {
            ++pos;
            if (pos >= text.size()) at.fail("dangling escape in string");
            switch (text[pos]) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                default: at.fail(std::string("unsupported escape \\") + text[pos]);
            }
            ++pos;
        } else {
            out += c;
            ++pos;
        }
    }
    at.fail("unterminated string");
}

nlohmann::json parse_scalar(const std::string& raw, const LineError& at) {
    const std::string v = trim(raw);
    if (v.empty()) at.fail("missing value");
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '"') {
        std::size_t pos = 0;
        std::string s = parse_basic_string(v, pos, at);
        if (pos != v.size()) at.fail("trailing characters after string");
        return s;
    }

    bool looks_float = false;
    std::size_t i = (v[0] == '+' || v[0] == '-') ? 1 : 0;
    if (i >= v.size()) at.fail("malformed number \"" + v + "\"");
    for (; i < v.size(); ++i) {
        const char c = v[i];
        if (c == '.' || c == 'e' || c == 'E' || c == '+' || c == '-')
            looks_float = true;
        else if (!std::isdigit(static_cast<unsigned char>(c)))
            at.fail("unrecognized value \"" + v + "\"");
    }
    std::size_t consumed = 0;
    try {
        if (looks_float) {
            const double d = std::stod(v, &consumed);
            if (consumed == v.size()) return d;
        } else {
            const long long n = std::stoll(v, &consumed);
            if (consumed == v.size()) return static_cast<std::int64_t>(n);
        }
    } catch (const std::exception&) {
    }
    at.fail("malformed number \"" + v + "\"");
}

nlohmann::json parse_value(const std::string& raw, const LineError& at) {
    const std::string v = trim(raw);
    if (v.empty()) at.fail("missing value");
    if (v.front() != '[') return parse_scalar(v, at);

    if (v.back() != ']') at.fail("unterminated array");
    nlohmann::json arr = nlohmann::json::array();
    std::string inner(v.begin() + 1, v.end() - 1);

    std::vector<std::string> items;
    std::string current;
    bool in_string = false;
    for (std::size_t i = 0; i < inner.size(); ++i) {
        const char c = inner[i];
        if (in_string) {
            current += c;
            if (c == '\\' && i + 1 < inner.size()) current += inner[++i];
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            current += c;
            in_string = true;
        } else if (c == ',') {
            items.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    if (in_string) at.fail("unterminated string in array");
    if (!trim(current).empty()) items.push_back(current);
    for (const auto& item : items) arr.push_back(parse_scalar(item, at));
    return arr;
}

}  // namespace

nlohmann::json parse_toml_subset(const std::string& text, const std::string& source_name) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;

    std::istringstream stream(text);
    std::string raw_line;
    std::size_t line_no = 0;
    while (std::getline(stream, raw_line)) {
        ++line_no;
        if (!raw_line.empty() && raw_line.back() == '\r') raw_line.pop_back();
        const LineError at{source_name, line_no};

        const std::string line = trim(strip_comment(raw_line));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') at.fail("unterminated table header");
            const std::string path = trim(line.substr(1, line.size() - 2));
            if (path.empty()) at.fail("empty table header");
            table = &root;
            std::size_t start = 0;
            while (start <= path.size()) {
                const std::size_t dot = path.find('.', start);
                const std::string part =
                    trim(path.substr(start, dot == std::string::npos ? std::string::npos
                                                                     : dot - start));
                if (!valid_bare_key(part)) at.fail("bad table name \"" + path + "\"");
                nlohmann::json& next = (*table)[part];
                if (next.is_null()) next = nlohmann::json::object();
                if (!next.is_object()) at.fail("\"" + part + "\" is not a table");
                table = &next;
                if (dot == std::string::npos) break;
                start = dot + 1;
            }
            continue;
        }

        // key = value, with '=' found outside any string
        std::size_t eq = std::string::npos;
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
            } else if (c == '"') {
                in_string = true;
            } else if (c == '=') {
                eq = i;
                break;
            }
        }
        if (eq == std::string::npos) at.fail("expected key = value");

        const std::string key = trim(line.substr(0, eq));
        if (!valid_bare_key(key)) at.fail("bad key \"" + key + "\"");
        if (table->contains(key)) at.fail("duplicate key \"" + key + "\"");
        (*table)[key] = parse_value(line.substr(eq + 1), at);
    }
    return root;
}

nlohmann::json load_toml_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_toml_subset(buf.str(), path.string());
}

}  // namespace cqforge
