#include <catch2/catch_amalgamated.hpp>

#include <wm/corpus.hpp>
#include <wm/http_judge.hpp>
#include <wm/judge.hpp>
#include <wm/quality.hpp>
#include <wm/rng.hpp>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

using namespace wm;

namespace {

TokenSeq seq(std::initializer_list<Token> ids) {
  TokenSeq s;
  s.tokens = ids;
  return s;
}

TokenSeq random_seq(rng::SplitMix64& g, std::size_t len, std::uint64_t range) {
  TokenSeq s;
  for (std::size_t i = 0; i < len; ++i) s.tokens.push_back(Token(g.below(range)));
  return s;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

quality::QualityConfig bundle_cfg() {
  const auto& b = corpus::bundled();
  quality::QualityConfig cfg;
  cfg.canon = quality::CanonTable(b.synonym_class, b.class_members);
  return cfg;
}

}  // namespace

TEST_CASE("ngram overlap on hand-enumerated sets", "[quality]") {
  REQUIRE(quality::ngram_overlap(seq({1, 2, 3}), seq({1, 2, 3}), 1) == 1.0);
  REQUIRE(quality::ngram_overlap(seq({1, 2, 3}), seq({4, 5, 6}), 1) == 0.0);
  // {1,2,3} vs {1,2,4}: intersection {1,2}, union {1,2,3,4}.
  REQUIRE(quality::ngram_overlap(seq({1, 2, 3}), seq({1, 2, 4}), 1) ==
          Catch::Approx(0.5));
  // Bigrams of [1,2,3]: (1,2),(2,3); of [2,3,1]: (2,3),(3,1). Jaccard 1/3.
  REQUIRE(quality::ngram_overlap(seq({1, 2, 3}), seq({2, 3, 1}), 2) ==
          Catch::Approx(1.0 / 3.0));
  // Repeats collapse: sets, not multisets.
  REQUIRE(quality::ngram_overlap(seq({7, 7, 7}), seq({7}), 1) == 1.0);
  // Both too short for n: identical empty sets.
  REQUIRE(quality::ngram_overlap(seq({1}), seq({2}), 2) == 1.0);
  REQUIRE(quality::ngram_overlap(TokenSeq{}, TokenSeq{}, 1) == 1.0);
  REQUIRE(quality::ngram_overlap(TokenSeq{}, seq({1}), 1) == 0.0);
  REQUIRE_THROWS_AS(quality::ngram_overlap(TokenSeq{}, TokenSeq{}, 0),
                    std::invalid_argument);
}

TEST_CASE("edit distance ratio on hand cases", "[quality]") {
  REQUIRE(quality::edit_distance_ratio(seq({1, 2, 3}), seq({1, 2, 3})) == 0.0);
  REQUIRE(quality::edit_distance_ratio(TokenSeq{}, TokenSeq{}) == 0.0);
  // Empty vs length 3: three insertions over total length 3.
  REQUIRE(quality::edit_distance_ratio(TokenSeq{}, seq({1, 2, 3})) == 1.0);
  // Two substitutions over total length 4.
  REQUIRE(quality::edit_distance_ratio(seq({1, 2}), seq({3, 4})) ==
          Catch::Approx(0.5));
  // One deletion: [1,2,3] -> [1,3].
  REQUIRE(quality::edit_distance_ratio(seq({1, 2, 3}), seq({1, 3})) ==
          Catch::Approx(0.2));
}

TEST_CASE("similarity metrics are symmetric and bounded", "[quality]") {
  rng::SplitMix64 g(17);
  for (int i = 0; i < 300; ++i) {
    auto x = random_seq(g, g.below(12), 6);
    auto y = random_seq(g, g.below(12), 6);
    double ov = quality::ngram_overlap(x, y, 1 + g.below(3));
    double ed = quality::edit_distance_ratio(x, y);
    REQUIRE(ov >= 0.0);
    REQUIRE(ov <= 1.0);
    REQUIRE(ed >= 0.0);
    REQUIRE(ed <= 1.0);
    REQUIRE(quality::ngram_overlap(y, x, 1) ==
            quality::ngram_overlap(x, y, 1));
    REQUIRE(quality::edit_distance_ratio(y, x) == ed);
  }
}

TEST_CASE("composite quality is one on identical text and zero against empty",
          "[quality]") {
  auto cfg = bundle_cfg();
  rng::SplitMix64 g(23);
  for (int i = 0; i < 50; ++i) {
    auto x = random_seq(g, 1 + g.below(40), corpus::bundled().vocab.size());
    REQUIRE(quality::quality_q(x, x, cfg) == Catch::Approx(1.0));
    REQUIRE(quality::quality_q(x, TokenSeq{}, cfg) == 0.0);
    auto y = random_seq(g, 1 + g.below(40), corpus::bundled().vocab.size());
    REQUIRE(quality::quality_q(x, y, cfg) ==
            Catch::Approx(quality::quality_q(y, x, cfg)));
  }
  REQUIRE(quality::quality_q(TokenSeq{}, TokenSeq{}, cfg) ==
          Catch::Approx(1.0));
}

TEST_CASE("synonym substitution keeps canonicalized overlap at one",
          "[quality]") {
  const auto& b = corpus::bundled();
  auto cfg = bundle_cfg();
  // Build x from class members and y by swapping each token for a synonym.
  TokenSeq x, y;
  std::size_t taken = 0;
  for (std::size_t cls = 0; cls < b.class_members.size() && taken < 30; ++cls) {
    if (b.class_members[cls].size() < 2) continue;
    x.tokens.push_back(b.class_members[cls][0]);
    y.tokens.push_back(b.class_members[cls][1]);
    ++taken;
  }
  REQUIRE(taken == 30);
  REQUIRE(quality::quality_q(x, y, cfg) == Catch::Approx(1.0));
  // Without canonicalization the same pair is token-disjoint.
  quality::QualityConfig plain;
  REQUIRE(quality::quality_q(x, y, plain) == Catch::Approx(0.3));
}

TEST_CASE("quality config validation", "[quality]") {
  quality::QualityConfig cfg;
  cfg.overlap_weight = 0.5;
  cfg.length_weight = 0.4;
  TokenSeq x = seq({1});
  REQUIRE_THROWS_AS(quality::quality_q(x, x, cfg), std::invalid_argument);
  cfg.overlap_weight = -0.1;
  cfg.length_weight = 1.1;
  REQUIRE_THROWS_AS(quality::quality_q(x, x, cfg), std::invalid_argument);
  cfg = quality::QualityConfig{};
  cfg.overlap_n = 0;
  REQUIRE_THROWS_AS(quality::quality_q(x, x, cfg), std::invalid_argument);
}

TEST_CASE("length mismatch lowers the composite score", "[quality]") {
  auto cfg = bundle_cfg();
  TokenSeq x = seq({10, 11, 12, 13, 14, 15, 16, 17});
  TokenSeq y = x;
  y.tokens.resize(4);
  // Unigram overlap 4/8, length score 4/8.
  REQUIRE(quality::quality_q(x, y, cfg) == Catch::Approx(0.5));
}

TEST_CASE("template filling replaces slots in order", "[quality]") {
  REQUIRE(judge::fill_template("a {} b {}", {"X", "Y"}) == "a X b Y");
  REQUIRE_THROWS_AS(judge::fill_template("{} {}", {"X"}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(judge::fill_template("{}", {"X", "Y"}),
                    std::invalid_argument);
  auto filled = judge::fill_template(judge::grading_template(), {"P", "R"});
  REQUIRE(filled.find("Prompt:P, Response:R") != std::string::npos);
}

TEST_CASE("grade parsing accepts integers and rejects noise", "[quality]") {
  REQUIRE(judge::parse_grade("85") == 85.0);
  REQUIRE(judge::parse_grade("Rating: [[51]]") == 51.0);
  REQUIRE(judge::parse_grade("100") == 100.0);
  REQUIRE(judge::parse_grade("0") == 0.0);
  REQUIRE_THROWS_AS(judge::parse_grade("banana"), std::invalid_argument);
  REQUIRE_THROWS_AS(judge::parse_grade(""), std::invalid_argument);
  REQUIRE_THROWS_AS(judge::parse_grade("123"), std::invalid_argument);
}

TEST_CASE("prompt template files match the embedded constants", "[quality]") {
  std::string base = WM_DATA_DIR;
  REQUIRE(slurp(base + "/llm_judge_prompt.txt") == judge::grading_template());
  REQUIRE(slurp(base + "/paraphrase_prompt.txt") ==
          judge::paraphrase_template());
}

TEST_CASE("stub judge equals the composite quality score", "[quality]") {
  const auto& b = corpus::bundled();
  auto cfg = bundle_cfg();
  judge::StubJudge stub(b.vocab, cfg);
  std::string prompt = "the story ends here .";
  std::string response = "the story ends here , thus .";
  TokenSeq x, y;
  x.tokens = text::to_ids(text::tokenize(prompt), b.vocab);
  y.tokens = text::to_ids(text::tokenize(response), b.vocab);
  REQUIRE(judge::judge_score(prompt, response, stub) ==
          Catch::Approx(quality::quality_q(x, y, cfg)));
  REQUIRE(judge::judge_score(prompt, prompt, stub) == Catch::Approx(1.0));
}

TEST_CASE("http judge round-trips through a local server", "[quality]") {
  httplib::Server server;
  std::atomic<int> mode{0};
  server.Post("/grade", [&mode](const httplib::Request& req,
                                httplib::Response& res) {
    REQUIRE(req.body.find("You are given a prompt") != std::string::npos);
    res.set_content(mode == 0 ? "85" : "banana", "text/plain");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&server] { server.listen_after_bind(); });
  server.wait_until_ready();

  judge::HttpJudge j("127.0.0.1", port);
  REQUIRE(judge::judge_score("p", "r", j) == Catch::Approx(0.85));
  mode = 1;
  REQUIRE_THROWS_AS(judge::judge_score("p", "r", j), std::invalid_argument);

  server.stop();
  t.join();

  judge::HttpJudge dead("127.0.0.1", port);
  REQUIRE_THROWS_AS(judge::judge_score("p", "r", dead), std::runtime_error);
}
