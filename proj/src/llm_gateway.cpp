#include "cqforge/llm_gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cqforge/error.hpp"
#include "cqforge/json_io.hpp"
#include "cqforge/text.hpp"

namespace cqforge {

namespace {

constexpr std::size_t kEmbedDim = 256;
constexpr auto kBackoffBase = std::chrono::milliseconds(100);
constexpr auto kBackoffCap = std::chrono::milliseconds(2000);

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return (v && *v) ? std::string(v) : fallback;
}

// Counting semaphore over (mutex, cv); releases on scope exit.
class InFlightSlot {
public:
    InFlightSlot(std::mutex& mu, std::condition_variable& cv, int& count, int limit)
        : mu_(mu), cv_(cv), count_(count) {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return count_ < limit; });
        ++count_;
    }
    ~InFlightSlot() {
        {
            std::lock_guard lock(mu_);
            --count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex& mu_;
    std::condition_variable& cv_;
    int& count_;
};

std::string first_content_words(const std::string& prompt) {
    std::string section = prompt;
    if (auto pos = prompt.find("Essay:"); pos != std::string::npos)
        section = prompt.substr(pos + 6);
    auto tokens = alnum_tokens(section);
    std::vector<std::string> content;
    for (const auto& t : tokens)
        if (t.size() >= 4) content.push_back(t);
    if (content.empty()) content = tokens;
    std::string out;
    for (std::size_t i = 0; i < content.size() && i < 3; ++i) {
        if (!out.empty()) out += ' ';
        out += content[i];
    }
    return out;
}

int requested_question_count(const std::string& prompt) {
    static const std::regex judge_re(R"(Select the (\d+) best critical questions)");
    std::smatch m;
    if (std::regex_search(prompt, m, judge_re)) return std::stoi(m[1].str());

    static const std::regex gen_re(R"((\d+) critical questions)");
    int total = 0;
    auto begin = std::sregex_iterator(prompt.begin(), prompt.end(), gen_re);
    for (auto it = begin; it != std::sregex_iterator(); ++it)
        total += std::stoi((*it)[1].str());
    return total > 0 ? total : 3;
}

}  // namespace

std::string mock_generate_rules(std::uint64_t /*seed*/, const std::string& prompt) {
    const int n = requested_question_count(prompt);
    const std::string words = first_content_words(prompt);
    std::string out;
    for (int i = 1; i <= n; ++i) {
        if (i > 1) out += '\n';
        out += "Is claim " + std::to_string(i);
        if (!words.empty()) out += " about " + words;
        out += " justified?";
    }
    return out;
}

EmbeddingVector mock_embed_text(const std::string& text) {
    EmbeddingVector v;
    v.values.assign(kEmbedDim, 0.0);
    for (const auto& token : alnum_tokens(text))
        v.values[fnv1a64(token) % kEmbedDim] += 1.0;
    double norm_sq = 0.0;
    for (double x : v.values) norm_sq += x * x;
    if (norm_sq > 0.0) {
        const double norm = std::sqrt(norm_sq);
        for (double& x : v.values) x /= norm;
    }
    return v;
}

MockBackend::MockBackend(const BackendDescriptor& desc) {
    if (!desc.seed)
        throw ValidationError("mock backend requires a seed");
    seed_ = *desc.seed;
    if (desc.fixture) {
        const auto doc = load_json_object(*desc.fixture);
        for (const auto& [key, value] : doc.items()) {
            if (!value.is_string())
                throw ValidationError(desc.fixture->string() +
                                      ": fixture values must be strings");
            fixture_[key] = value.get<std::string>();
        }
    }
}

std::string MockBackend::generate(const GenParams& params, const std::string& prompt) {
    if (prompt.empty()) throw ValidationError("generate requires a nonempty prompt");
    {
        std::lock_guard lock(mu_);
        calls_.push_back({"generate", params.model, prompt, 1});
    }
    if (auto it = fixture_.find(to_hex(fnv1a64(prompt))); it != fixture_.end())
        return it->second;
    return mock_generate_rules(seed_, prompt);
}

std::vector<EmbeddingVector> MockBackend::embed(const std::string& model,
                                                const std::vector<std::string>& texts) {
    if (texts.empty()) throw ValidationError("embed requires at least one text");
    std::string joined;
    for (const auto& t : texts) {
        if (t.empty()) throw ValidationError("embed texts must be nonempty");
        if (!joined.empty()) joined += '\n';
        joined += t;
    }
    {
        std::lock_guard lock(mu_);
        calls_.push_back({"embed", model, joined, texts.size()});
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(mock_embed_text(t));
    return out;
}

std::string MockBackend::describe() const {
    return "mock(seed=" + std::to_string(seed_) + ")";
}

std::vector<MockCall> MockBackend::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::string chat_request_body(const GenParams& params, const std::string& prompt) {
    nlohmann::ordered_json body;
    body["model"] = params.model;
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "user"}, {"content", prompt}}});
    body["stream"] = false;
    if (params.temperature || params.max_tokens) {
        nlohmann::ordered_json options;
        if (params.temperature) options["temperature"] = *params.temperature;
        if (params.max_tokens) options["num_predict"] = *params.max_tokens;
        body["options"] = std::move(options);
    }
    return body.dump();
}

std::string embed_request_body(const std::string& model,
                               const std::vector<std::string>& texts) {
    nlohmann::ordered_json body;
    body["model"] = model;
    body["input"] = texts;
    return body.dump();
}

HttpBackend::HttpBackend(const BackendDescriptor& desc)
    : max_in_flight_(desc.max_in_flight > 0 ? desc.max_in_flight : 2) {
    std::string url = env_or("CQFORGE_BASE_URL", desc.base_url.value_or(""));
    if (url.empty())
        throw ValidationError("http backend requires a base_url");
    while (!url.empty() && url.back() == '/') url.pop_back();
    if (url.rfind("https://", 0) == 0)
        throw ValidationError("https endpoints are not supported in this build; "
                              "use a plain-http base_url");
    base_url_ = url;
    api_key_ = env_or("CQFORGE_API_KEY", "");
}

std::string HttpBackend::post_json(const std::string& route, const std::string& body,
                                   std::chrono::milliseconds timeout, int retries) {
    InFlightSlot slot(slot_mu_, slot_cv_, in_flight_, max_in_flight_);

    const int attempts = retries + 1;
    std::string last_failure;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            auto delay = kBackoffBase * (1 << (attempt - 1));
            std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(delay, kBackoffCap));
        }

        // One client per request: httplib clients are not safe to share
        // across threads.
        httplib::Client client(base_url_);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers;
        if (!api_key_.empty())
            headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = client.Post(route, headers, body, "application/json");
        if (!res) {
            last_failure = "transport: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        if (res->status >= 400 && res->status < 500) {
            std::string snippet = res->body.substr(0, 200);
            throw BackendError(base_url_ + route + " returned HTTP " +
                               std::to_string(res->status) + ": " + snippet);
        }
        last_failure = "HTTP " + std::to_string(res->status);
    }
    throw TransportError(base_url_ + route + " failed after " +
                         std::to_string(attempts) + " attempt" +
                         (attempts == 1 ? "" : "s") + " (" + last_failure + ")");
}

std::string HttpBackend::generate(const GenParams& params, const std::string& prompt) {
    if (prompt.empty()) throw ValidationError("generate requires a nonempty prompt");
    const std::string raw = post_json("/api/chat", chat_request_body(params, prompt),
                                      params.request_timeout, params.retries);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError("model \"" + params.model + "\": unparseable response: " + e.what());
    }
    if (doc.contains("error"))
        throw BackendError("model \"" + params.model + "\": " + doc["error"].dump());
    if (!doc.contains("message") || !doc["message"].contains("content") ||
        !doc["message"]["content"].is_string())
        throw BackendError("model \"" + params.model +
                           "\": response lacks message.content");
    return doc["message"]["content"].get<std::string>();
}

std::vector<EmbeddingVector> HttpBackend::embed(const std::string& model,
                                                const std::vector<std::string>& texts) {
    if (texts.empty()) throw ValidationError("embed requires at least one text");
    for (const auto& t : texts)
        if (t.empty()) throw ValidationError("embed texts must be nonempty");

    GenParams defaults;  // embed reuses the default timeout/retry policy
    const std::string raw = post_json("/api/embed", embed_request_body(model, texts),
                                      defaults.request_timeout, defaults.retries);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError("model \"" + model + "\": unparseable response: " + e.what());
    }
    if (doc.contains("error"))
        throw BackendError("model \"" + model + "\": " + doc["error"].dump());
    if (!doc.contains("embeddings") || !doc["embeddings"].is_array())
        throw BackendError("model \"" + model + "\": response lacks embeddings");
    const auto& rows = doc["embeddings"];
    if (rows.size() != texts.size())
        throw BackendError("model \"" + model + "\": expected " +
                           std::to_string(texts.size()) + " embeddings, got " +
                           std::to_string(rows.size()));

    std::vector<EmbeddingVector> out;
    out.reserve(rows.size());
    std::size_t dim = 0;
    for (const auto& row : rows) {
        if (!row.is_array() || row.empty())
            throw BackendError("model \"" + model + "\": malformed embedding row");
        EmbeddingVector v;
        v.values.reserve(row.size());
        for (const auto& x : row) {
            if (!x.is_number())
                throw BackendError("model \"" + model + "\": non-numeric embedding entry");
            const double value = x.get<double>();
            if (!std::isfinite(value))
                throw BackendError("model \"" + model + "\": non-finite embedding entry");
            v.values.push_back(value);
        }
        if (dim == 0)
            dim = v.dim();
        else if (v.dim() != dim)
            throw BackendError("model \"" + model + "\": ragged embedding dimensions (" +
                               std::to_string(dim) + " vs " + std::to_string(v.dim()) + ")");
        out.push_back(std::move(v));
    }
    return out;
}

std::string HttpBackend::describe() const {
    return "http(" + base_url_ + ")";
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& desc) {
    switch (desc.kind) {
        case BackendKind::Mock: return std::make_unique<MockBackend>(desc);
        case BackendKind::Http: return std::make_unique<HttpBackend>(desc);
    }
    throw ValidationError("unknown backend kind");
}

}  // namespace cqforge
