#include "cqforge/json_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cqforge/error.hpp"

namespace cqforge {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw ParseError("read failed for " + path.string());
    return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
    out.close();
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

nlohmann::ordered_json parse_json_object(const std::string& text,
                                         const std::string& source_name) {
    std::set<std::string> seen;
    std::string duplicate;
    auto cb = [&](int depth, nlohmann::ordered_json::parse_event_t event,
                  nlohmann::ordered_json& parsed) {
        if (depth == 1 && event == nlohmann::ordered_json::parse_event_t::key) {
            const auto key = parsed.get<std::string>();
            if (!seen.insert(key).second && duplicate.empty()) duplicate = key;
        }
        return true;
    };
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text, cb);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(source_name + ": " + e.what());
    }
    if (!duplicate.empty())
        throw ParseError(source_name + ": duplicate top-level key \"" + duplicate + "\"");
    if (!doc.is_object())
        throw ParseError(source_name + ": expected a top-level JSON object");
    return doc;
}

nlohmann::ordered_json load_json_object(const std::filesystem::path& path) {
    return parse_json_object(read_file(path), path.string());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

}  // namespace cqforge
