#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace cqforge {

struct GenParams {
    std::string model;
    std::optional<double> temperature;  // absent = backend default, field not sent
    std::optional<int> max_tokens;
    std::chrono::milliseconds request_timeout{120000};
    int retries = 2;
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

enum class BackendKind { Http, Mock };

struct BackendDescriptor {
    BackendKind kind = BackendKind::Mock;
    std::optional<std::string> base_url;            // required for http
    std::optional<std::filesystem::path> fixture;   // optional canned responses, mock only
    std::optional<std::uint64_t> seed;              // required for mock
    int max_in_flight = 2;
};

/// Uniform text-generation + embedding interface. Implementations are safe
/// for concurrent calls; the in-flight bound is enforced internally.
class Backend {
public:
    virtual ~Backend() = default;

    /// Raw completion text for a single-user-message chat turn.
    virtual std::string generate(const GenParams& params, const std::string& prompt) = 0;

    /// One vector per text, order preserved, uniform dimension.
    virtual std::vector<EmbeddingVector> embed(const std::string& model,
                                               const std::vector<std::string>& texts) = 0;

    virtual std::string describe() const = 0;
};

struct MockCall {
    std::string op;      // "generate" or "embed"
    std::string model;
    std::string prompt;  // generate: the prompt; embed: joined inputs
    std::size_t batch = 1;
};

/// Deterministic stand-in: fixture lookup by prompt hash, else synthesized
/// question lines; embeddings are hashed bag-of-words vectors.
class MockBackend : public Backend {
public:
    explicit MockBackend(const BackendDescriptor& desc);

    std::string generate(const GenParams& params, const std::string& prompt) override;
    std::vector<EmbeddingVector> embed(const std::string& model,
                                       const std::vector<std::string>& texts) override;
    std::string describe() const override;

    /// Calls observed so far, in order. For tests that assert request shape.
    std::vector<MockCall> calls() const;

private:
    std::uint64_t seed_;
    std::map<std::string, std::string> fixture_;  // fnv1a64 hex of prompt -> response
    mutable std::mutex mu_;
    std::vector<MockCall> calls_;
};

class HttpBackend : public Backend {
public:
    explicit HttpBackend(const BackendDescriptor& desc);

    std::string generate(const GenParams& params, const std::string& prompt) override;
    std::vector<EmbeddingVector> embed(const std::string& model,
                                       const std::vector<std::string>& texts) override;
    std::string describe() const override;

private:
    std::string post_json(const std::string& route, const std::string& body,
                          std::chrono::milliseconds timeout, int retries);

    std::string base_url_;
    std::string api_key_;  // empty = no Authorization header
    int max_in_flight_;
    std::mutex slot_mu_;
    std::condition_variable slot_cv_;
    int in_flight_ = 0;
};

std::unique_ptr<Backend> make_backend(const BackendDescriptor& desc);

/// Request bodies for the Ollama-compatible wire format, exposed so tests
/// can pin the exact JSON without a server.
std::string chat_request_body(const GenParams& params, const std::string& prompt);
std::string embed_request_body(const std::string& model,
                               const std::vector<std::string>& texts);

/// The deterministic rule the mock uses when no fixture entry matches.
/// Exposed so tests can state expected completions independently.
std::string mock_generate_rules(std::uint64_t seed, const std::string& prompt);

/// Hashed bag-of-words embedding (lowercase, alnum tokens, FNV-1a mod 256,
/// counts, L2-normalized). Also the mock's embed rule.
EmbeddingVector mock_embed_text(const std::string& text);

}  // namespace cqforge
