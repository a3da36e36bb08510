#include <doctest/doctest.h>

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "cqforge/error.hpp"
#include "cqforge/llm_gateway.hpp"
#include "cqforge/text.hpp"
#include "helpers.hpp"

using namespace cqforge;

namespace {

BackendDescriptor mock_desc(std::uint64_t seed = 0) {
    BackendDescriptor d;
    d.kind = BackendKind::Mock;
    d.seed = seed;
    return d;
}

}  // namespace

TEST_CASE("chat request body pins the wire format") {
    GenParams p;
    p.model = "llama3.1:8b";

    SUBCASE("minimal: no options block at all") {
        CHECK(chat_request_body(p, "Hello") ==
              R"({"model":"llama3.1:8b","messages":[{"role":"user","content":"Hello"}],"stream":false})");
    }
    SUBCASE("temperature only") {
        p.temperature = 0.5;
        CHECK(chat_request_body(p, "Hi") ==
              R"({"model":"llama3.1:8b","messages":[{"role":"user","content":"Hi"}],"stream":false,"options":{"temperature":0.5}})");
    }
    SUBCASE("temperature and max tokens") {
        p.temperature = 0.0;
        p.max_tokens = 256;
        CHECK(chat_request_body(p, "Hi") ==
              R"({"model":"llama3.1:8b","messages":[{"role":"user","content":"Hi"}],"stream":false,"options":{"temperature":0.0,"num_predict":256}})");
    }
    SUBCASE("max tokens only") {
        p.max_tokens = 64;
        CHECK(chat_request_body(p, "Hi") ==
              R"({"model":"llama3.1:8b","messages":[{"role":"user","content":"Hi"}],"stream":false,"options":{"num_predict":64}})");
    }
}

TEST_CASE("embed request body pins the wire format") {
    CHECK(embed_request_body("all-minilm", {"one", "two"}) ==
          R"({"model":"all-minilm","input":["one","two"]})");
    CHECK(embed_request_body("m", {"solo"}) == R"({"model":"m","input":["solo"]})");
}

TEST_CASE("mock generate synthesizes the requested number of questions") {
    SUBCASE("generation prompt with a count") {
        const std::string prompt =
            "Essay:\nCities must ban private cars downtown.\n\n"
            "Your goal is to generate 4 critical questions to evaluate the arguments "
            "in the given essay.";
        const std::string out = mock_generate_rules(0, prompt);
        // Content words: first three alnum tokens of length >= 4 after "Essay:".
        CHECK(out ==
              "Is claim 1 about cities must private justified?\n"
              "Is claim 2 about cities must private justified?\n"
              "Is claim 3 about cities must private justified?\n"
              "Is claim 4 about cities must private justified?");
    }
    SUBCASE("judge prompt takes precedence over candidate counts") {
        const std::string prompt =
            "Essay:\nShort words only.\n\n"
            "Select the 2 best critical questions that should be raised before "
            "accepting the arguments in the essay.";
        const std::string out = mock_generate_rules(7, prompt);
        CHECK(out ==
              "Is claim 1 about short words only justified?\n"
              "Is claim 2 about short words only justified?");
    }
    SUBCASE("two counts sum (the dual-goal phrasing)") {
        const std::string prompt =
            "Essay:\nxy\n\nYour goal is to generate 3 critical questions without "
            "considering the schemes and 3 critical questions using the provided "
            "scheme and template to evaluate the arguments in the given essay.";
        const std::string out = mock_generate_rules(0, prompt);
        int lines = 1;
        for (char c : out)
            if (c == '\n') ++lines;
        CHECK(lines == 6);
        CHECK(out.find("Is claim 6") != std::string::npos);
    }
    SUBCASE("no count defaults to three") {
        const std::string out = mock_generate_rules(0, "Essay:\nsomething interesting here");
        int lines = 1;
        for (char c : out)
            if (c == '\n') ++lines;
        CHECK(lines == 3);
    }
    SUBCASE("deterministic regardless of seed") {
        const std::string prompt = "Essay:\nDeterministic essay body here.";
        CHECK(mock_generate_rules(1, prompt) == mock_generate_rules(999, prompt));
    }
}

TEST_CASE("mock embeddings are unit-norm, 256-dim, and deterministic") {
    const auto v = mock_embed_text("Is the expert credible?");
    REQUIRE(v.dim() == 256);
    double norm_sq = 0;
    for (double x : v.values) norm_sq += x * x;
    CHECK(norm_sq == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(mock_embed_text("same text").values == mock_embed_text("same text").values);
    CHECK(mock_embed_text("alpha beta").values != mock_embed_text("gamma delta").values);

    // Bag-of-words: token order does not matter, case does not matter.
    CHECK(mock_embed_text("Alpha beta").values == mock_embed_text("beta ALPHA").values);

    // A text with no alnum tokens embeds to the zero vector (norm left at 0).
    const auto zero = mock_embed_text("?!");
    for (double x : zero.values) CHECK(x == 0.0);
}

TEST_CASE("MockBackend records calls and validates inputs") {
    MockBackend backend(mock_desc(5));
    GenParams p;
    p.model = "mock-model";

    CHECK(backend.describe() == "mock(seed=5)");
    CHECK_THROWS_AS(backend.generate(p, ""), ValidationError);
    CHECK_THROWS_AS(backend.embed("m", {}), ValidationError);
    CHECK_THROWS_AS(backend.embed("m", {"ok", ""}), ValidationError);

    const std::string out = backend.generate(p, "Essay:\nBody words here today.");
    CHECK(out == mock_generate_rules(5, "Essay:\nBody words here today."));

    const auto vecs = backend.embed("embed-model", {"one two", "three"});
    REQUIRE(vecs.size() == 2);
    CHECK(vecs[0].values == mock_embed_text("one two").values);

    const auto calls = backend.calls();
    // The rejected calls above never got recorded.
    REQUIRE(calls.size() == 2);
    CHECK(calls[0].op == "generate");
    CHECK(calls[0].model == "mock-model");
    CHECK(calls[0].prompt == "Essay:\nBody words here today.");
    CHECK(calls[0].batch == 1);
    CHECK(calls[1].op == "embed");
    CHECK(calls[1].model == "embed-model");
    CHECK(calls[1].prompt == "one two\nthree");
    CHECK(calls[1].batch == 2);
}

TEST_CASE("MockBackend fixture overrides keyed by prompt hash") {
    testutil::TempDir tmp;
    const std::string prompt = "Essay:\nFixture target.";
    nlohmann::json fixture = {
        {to_hex(fnv1a64(prompt)), "Canned answer?\nSecond canned answer?"},
    };
    const auto path = tmp.file("fixture.json");
    testutil::write_file(path, fixture.dump());

    BackendDescriptor d = mock_desc(0);
    d.fixture = path;
    MockBackend backend(d);
    GenParams p;
    p.model = "m";

    CHECK(backend.generate(p, prompt) == "Canned answer?\nSecond canned answer?");
    // Prompts without a fixture entry fall through to the synthesized rule.
    CHECK(backend.generate(p, "Essay:\nOther prompt wording.") ==
          mock_generate_rules(0, "Essay:\nOther prompt wording."));

    SUBCASE("non-string fixture values are rejected") {
        const auto bad = tmp.file("bad_fixture.json");
        testutil::write_file(bad, R"({"abc": 42})");
        BackendDescriptor b = mock_desc(0);
        b.fixture = bad;
        CHECK_THROWS_AS(MockBackend{b}, ValidationError);
    }
}

TEST_CASE("backend construction rules") {
    SUBCASE("mock requires a seed") {
        BackendDescriptor d;
        d.kind = BackendKind::Mock;
        CHECK_THROWS_AS(make_backend(d), ValidationError);
    }
    SUBCASE("make_backend dispatches on kind") {
        auto mock = make_backend(mock_desc(1));
        CHECK(mock->describe() == "mock(seed=1)");

        BackendDescriptor h;
        h.kind = BackendKind::Http;
        h.base_url = "http://localhost:11434/";
        auto http = make_backend(h);
        // Trailing slash is normalized away.
        CHECK(http->describe() == "http(http://localhost:11434)");
    }
    SUBCASE("http requires a base_url") {
        BackendDescriptor d;
        d.kind = BackendKind::Http;
        CHECK_THROWS_AS(make_backend(d), ValidationError);
    }
    SUBCASE("https endpoints are refused up front") {
        BackendDescriptor d;
        d.kind = BackendKind::Http;
        d.base_url = "https://api.example.com";
        CHECK_THROWS_AS(make_backend(d), ValidationError);
    }
}
