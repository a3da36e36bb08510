#include "cqforge/expctl.hpp"

#include <algorithm>
#include <set>

#include "cqforge/error.hpp"
#include "cqforge/text.hpp"
#include "cqforge/toml_lite.hpp"

namespace cqforge {

namespace {

class ConfigReader {
public:
    ConfigReader(const nlohmann::json& doc, std::string scope)
        : doc_(doc), scope_(std::move(scope)) {}

    bool has(const char* key) const { return doc_.contains(key); }

    std::string get_string(const char* key) const {
        require(key, nlohmann::json::value_t::string, "a string");
        return doc_[key].get<std::string>();
    }
    std::int64_t get_int(const char* key) const {
        if (!doc_.contains(key) || !doc_[key].is_number_integer())
            fail(key, "an integer");
        return doc_[key].get<std::int64_t>();
    }
    double get_double(const char* key) const {
        if (!doc_.contains(key) || !doc_[key].is_number())
            fail(key, "a number");
        return doc_[key].get<double>();
    }
    bool get_bool(const char* key) const {
        require(key, nlohmann::json::value_t::boolean, "a boolean");
        return doc_[key].get<bool>();
    }
    std::vector<std::string> get_string_array(const char* key) const {
        if (!doc_.contains(key) || !doc_[key].is_array()) fail(key, "an array");
        std::vector<std::string> out;
        for (const auto& v : doc_[key]) {
            if (!v.is_string()) fail(key, "an array of strings");
            out.push_back(v.get<std::string>());
        }
        return out;
    }
    std::vector<std::uint64_t> get_uint_array(const char* key) const {
        if (!doc_.contains(key) || !doc_[key].is_array()) fail(key, "an array");
        std::vector<std::uint64_t> out;
        for (const auto& v : doc_[key]) {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
                fail(key, "an array of non-negative integers");
            out.push_back(v.get<std::uint64_t>());
        }
        return out;
    }

private:
    void require(const char* key, nlohmann::json::value_t type, const char* what) const {
        if (!doc_.contains(key) || doc_[key].type() != type) fail(key, what);
    }
    [[noreturn]] void fail(const char* key, const char* what) const {
        throw ValidationError(scope_ + key + " must be " + what);
    }

    const nlohmann::json& doc_;
    std::string scope_;
};

BackendKind backend_kind_from_string(const std::string& s, const std::string& scope) {
    if (s == "mock") return BackendKind::Mock;
    if (s == "http") return BackendKind::Http;
    throw ValidationError(scope + "backend must be \"mock\" or \"http\", got \"" + s + "\"");
}

RoleConfig role_from_json(const nlohmann::json& doc, const std::string& scope) {
    ConfigReader r(doc, scope);
    RoleConfig role;
    if (r.has("backend"))
        role.backend.kind = backend_kind_from_string(r.get_string("backend"), scope);
    if (r.has("base_url")) role.backend.base_url = r.get_string("base_url");
    if (r.has("seed")) role.backend.seed = static_cast<std::uint64_t>(r.get_int("seed"));
    if (r.has("fixture")) role.backend.fixture = r.get_string("fixture");
    if (r.has("max_in_flight")) role.backend.max_in_flight = static_cast<int>(r.get_int("max_in_flight"));
    role.params.model = r.has("model") ? r.get_string("model") : "";
    if (r.has("temperature")) role.params.temperature = r.get_double("temperature");
    if (r.has("max_tokens")) role.params.max_tokens = static_cast<int>(r.get_int("max_tokens"));
    if (r.has("retries")) role.params.retries = static_cast<int>(r.get_int("retries"));
    if (r.has("timeout_ms"))
        role.params.request_timeout = std::chrono::milliseconds(r.get_int("timeout_ms"));
    return role;
}

nlohmann::json role_to_json(const RoleConfig& role) {
    nlohmann::json doc;
    doc["backend"] = role.backend.kind == BackendKind::Mock ? "mock" : "http";
    if (role.backend.base_url) doc["base_url"] = *role.backend.base_url;
    if (role.backend.seed) doc["seed"] = *role.backend.seed;
    if (role.backend.fixture) doc["fixture"] = role.backend.fixture->string();
    doc["max_in_flight"] = role.backend.max_in_flight;
    doc["model"] = role.params.model;
    if (role.params.temperature) doc["temperature"] = *role.params.temperature;
    if (role.params.max_tokens) doc["max_tokens"] = *role.params.max_tokens;
    doc["retries"] = role.params.retries;
    doc["timeout_ms"] = role.params.request_timeout.count();
    return doc;
}

int candidate_capacity(SchemeMode mode, int n) {
    switch (mode) {
        case SchemeMode::Without:
        case SchemeMode::WithOne:
        case SchemeMode::WithMult:  // at least one prompt of n
            return n;
        case SchemeMode::BothMerged:
        case SchemeMode::BothSingle:
            return 2 * n;
    }
    return n;
}

}  // namespace

ExperimentConfig config_from_toml(const std::filesystem::path& path) {
    const nlohmann::json doc = load_toml_file(path);
    ExperimentConfig cfg;
    ConfigReader top(doc, "");

    if (top.has("corpus")) cfg.corpus_path = top.get_string("corpus");
    if (top.has("out_dir")) cfg.out_dir = top.get_string("out_dir");
    if (top.has("mode")) cfg.mode = scheme_mode_from_string(top.get_string("mode"));
    if (top.has("n")) cfg.n = static_cast<int>(top.get_int("n"));
    if (top.has("k")) cfg.k = static_cast<int>(top.get_int("k"));
    if (top.has("strategies")) cfg.strategies = top.get_string_array("strategies");
    if (top.has("runs")) cfg.runs = static_cast<int>(top.get_int("runs"));
    if (top.has("seeds")) cfg.seeds = top.get_uint_array("seeds");
    if (top.has("kb")) cfg.kb_path = top.get_string("kb");
    if (top.has("judge_include_schemes"))
        cfg.judge_include_schemes = top.get_bool("judge_include_schemes");
    if (top.has("failure_threshold")) cfg.failure_threshold = top.get_double("failure_threshold");
    if (top.has("workers")) cfg.workers = static_cast<int>(top.get_int("workers"));

    if (doc.contains("split")) {
        if (!doc["split"].is_object())
            throw ValidationError("split must be a table");
        ConfigReader split(doc["split"], "split.");
        SplitSpec spec;
        spec.seed = static_cast<std::uint64_t>(split.get_int("seed"));
        spec.train = static_cast<std::size_t>(split.get_int("train"));
        spec.val = static_cast<std::size_t>(split.get_int("val"));
        spec.test = static_cast<std::size_t>(split.get_int("test"));
        cfg.split = spec;
        if (split.has("part")) cfg.split_part = split.get_string("part");
    }

    if (doc.contains("questioner"))
        cfg.questioner = role_from_json(doc["questioner"], "questioner.");
    if (doc.contains("judge")) cfg.judge = role_from_json(doc["judge"], "judge.");

    if (doc.contains("eval")) {
        if (!doc["eval"].is_object())
            throw ValidationError("eval must be a table");
        ConfigReader ev(doc["eval"], "eval.");
        if (ev.has("embedding_model")) cfg.eval.embedding_model = ev.get_string("embedding_model");
        if (ev.has("threshold")) cfg.eval.threshold = ev.get_double("threshold");
        if (ev.has("strict_gt")) cfg.eval.strict_greater = ev.get_bool("strict_gt");
        if (ev.has("backend"))
            cfg.eval.embedding_backend.kind =
                backend_kind_from_string(ev.get_string("backend"), "eval.");
        if (ev.has("base_url")) cfg.eval.embedding_backend.base_url = ev.get_string("base_url");
        if (ev.has("seed"))
            cfg.eval.embedding_backend.seed = static_cast<std::uint64_t>(ev.get_int("seed"));
        if (ev.has("fixture")) cfg.eval.embedding_backend.fixture = ev.get_string("fixture");
        if (ev.has("cache")) cfg.embedding_cache = ev.get_string("cache");
    }
    return cfg;
}

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
    RoleConfig questioner;
    questioner.backend.kind = BackendKind::Http;
    questioner.backend.base_url = "http://localhost:11434";
    RoleConfig judge = questioner;

    if (name == "sub1") {
        questioner.params.model = "llama3.1:8b";
        judge.params.model = "gemma2:9b";
    } else if (name == "sub2") {
        questioner.params.model = "llama3.1:8b";
        judge.params.model = "gpt-4o";
    } else if (name == "sub3") {
        questioner.params.model = "gpt-4o";
        judge.params.model = "gpt-4o";
    } else {
        throw ValidationError("unknown preset \"" + name +
                              "\" (expected sub1, sub2, or sub3)");
    }

    cfg.questioner = questioner;
    cfg.judge = judge;
    cfg.mode = SchemeMode::BothSingle;
    cfg.n = 4;
    cfg.k = 3;
    cfg.strategies = {"judge"};
}

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig cfg;
    apply_preset(cfg, name);
    return cfg;
}

void resolve_config(ExperimentConfig& cfg) {
    if (cfg.corpus_path.empty()) throw ValidationError("a corpus path is required");
    if (cfg.out_dir.empty()) throw ValidationError("an output directory is required");
    if (cfg.n < 1) throw ValidationError("n must be at least 1");
    if (cfg.k < 1) throw ValidationError("k must be at least 1");
    if (cfg.runs < 1) throw ValidationError("runs must be at least 1");
    if (cfg.workers < 1) cfg.workers = 1;
    if (!(cfg.failure_threshold >= 0.0 && cfg.failure_threshold <= 1.0))
        throw ValidationError("failure_threshold must lie in [0, 1]");

    if (cfg.strategies.empty()) throw ValidationError("at least one strategy is required");
    std::set<std::string> seen;
    for (const auto& s : cfg.strategies) {
        if (s != "judge" && s != "random" && s != "oracle")
            throw ValidationError("unknown strategy \"" + s +
                                  "\" (expected judge, random, or oracle)");
        if (!seen.insert(s).second)
            throw ValidationError("strategy \"" + s + "\" listed twice");
    }
    if (seen.count("judge") && !cfg.judge)
        throw ValidationError("the judge strategy needs a [judge] role configuration");

    if (cfg.k > candidate_capacity(cfg.mode, cfg.n))
        throw ValidationError("k = " + std::to_string(cfg.k) +
                              " exceeds the candidate capacity of mode \"" +
                              std::string(to_string(cfg.mode)) + "\" with n = " +
                              std::to_string(cfg.n));

    if (cfg.seeds.empty()) {
        for (int i = 1; i <= cfg.runs; ++i)
            cfg.seeds.push_back(static_cast<std::uint64_t>(i));
    } else if (static_cast<int>(cfg.seeds.size()) != cfg.runs) {
        throw ValidationError("runs = " + std::to_string(cfg.runs) + " but " +
                              std::to_string(cfg.seeds.size()) + " seeds were given");
    }

    if (cfg.split && cfg.split_part != "train" && cfg.split_part != "val" &&
        cfg.split_part != "test")
        throw ValidationError("split part must be train, val, or test");

    if (cfg.eval.embedding_model.empty())
        throw ValidationError("eval.embedding_model is required; there is no default");
    auto default_mock_seed = [](BackendDescriptor& desc) {
        if (desc.kind == BackendKind::Mock && !desc.seed) desc.seed = 0;
    };
    default_mock_seed(cfg.eval.embedding_backend);
    default_mock_seed(cfg.questioner.backend);
    if (cfg.judge) default_mock_seed(cfg.judge->backend);
    if (cfg.questioner.params.model.empty())
        throw ValidationError("questioner.model is required");
    if (cfg.judge && cfg.judge->params.model.empty())
        throw ValidationError("judge.model is required when a judge is configured");
}

nlohmann::json config_to_json(const ExperimentConfig& cfg, bool include_out_dir) {
    nlohmann::json doc;
    doc["corpus"] = cfg.corpus_path.string();
    if (cfg.split) {
        doc["split"] = {{"seed", cfg.split->seed},
                        {"train", cfg.split->train},
                        {"val", cfg.split->val},
                        {"test", cfg.split->test},
                        {"part", cfg.split_part}};
    }
    doc["questioner"] = role_to_json(cfg.questioner);
    if (cfg.judge) doc["judge"] = role_to_json(*cfg.judge);
    doc["mode"] = std::string(to_string(cfg.mode));
    doc["n"] = cfg.n;
    doc["k"] = cfg.k;
    doc["strategies"] = cfg.strategies;
    doc["runs"] = cfg.runs;
    doc["seeds"] = cfg.seeds;

    nlohmann::json eval;
    eval["embedding_model"] = cfg.eval.embedding_model;
    eval["threshold"] = cfg.eval.threshold;
    eval["strict_gt"] = cfg.eval.strict_greater;
    eval["backend"] = role_to_json({cfg.eval.embedding_backend, {}});
    eval["backend"].erase("model");
    eval["backend"].erase("retries");
    eval["backend"].erase("timeout_ms");
    doc["eval"] = std::move(eval);

    if (cfg.kb_path) doc["kb"] = cfg.kb_path->string();
    doc["judge_include_schemes"] = cfg.judge_include_schemes;
    doc["failure_threshold"] = cfg.failure_threshold;
    doc["workers"] = cfg.workers;
    if (include_out_dir) doc["out_dir"] = cfg.out_dir.string();
    return doc;
}

std::string config_digest(const ExperimentConfig& cfg) {
    return to_hex(fnv1a64(config_to_json(cfg, /*include_out_dir=*/false).dump()));
}

}  // namespace cqforge
