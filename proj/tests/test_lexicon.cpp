#include "engage/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "engage/errors.hpp"
#include "engage/rng.hpp"

using engage::Category;
using engage::DataError;
using engage::Lexicon;
using engage::LexiconEntry;
using engage::ParseError;
using engage::Rng;
using engage::score_user;

namespace {

const char* kSmallDic =
    "%\n"
    "1\tanger\n"
    "31\tsocial\n"
    "%\n"
    "hate*\t1\n"
    "angry\t1\n"
    "friend*\t31\n";

std::string demo_path() { return std::string(ENGAGE_DATA_DIR) + "/demo.dic"; }

// Reference matcher: linear scan over every entry.
std::vector<int> match_linear(const Lexicon& lex, const std::string& token) {
  std::set<int> ids;
  for (const auto& entry : lex.entries()) {
    const bool hit = entry.wildcard
                         ? token.size() >= entry.pattern.size() &&
                               token.compare(0, entry.pattern.size(), entry.pattern) == 0
                         : token == entry.pattern;
    if (hit) ids.insert(entry.category_ids.begin(), entry.category_ids.end());
  }
  return {ids.begin(), ids.end()};
}

std::string random_word(Rng& rng, size_t max_len) {
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz'";
  std::string w;
  const size_t len = 1 + rng.index(max_len);
  for (size_t i = 0; i < len; ++i) w.push_back(alphabet[rng.index(alphabet.size())]);
  return w;
}

}  // namespace

TEST_CASE("parse small dictionary") {
  const auto lex = Lexicon::parse(kSmallDic);
  REQUIRE(lex.categories().size() == 2);
  CHECK(lex.categories()[0].id == 1);
  CHECK(lex.categories()[0].name == "anger");
  CHECK(lex.categories()[1].id == 31);
  REQUIRE(lex.entries().size() == 3);
  CHECK(lex.entries()[0].wildcard);
  CHECK_FALSE(lex.entries()[1].wildcard);
}

TEST_CASE("parse errors carry context") {
  CHECK_THROWS_AS(Lexicon::parse("%\n1\tanger\n%\nhate*\t9\n"), ParseError);
  CHECK_THROWS_WITH_AS(Lexicon::parse("%\n1\tanger\n%\nhate*\t9\n"),
                       doctest::Contains("unknown category"), ParseError);
  // interior '*'
  CHECK_THROWS_AS(Lexicon::parse("%\n1\ta\n%\nha*te\t1\n"), ParseError);
  // duplicate category id
  CHECK_THROWS_AS(Lexicon::parse("%\n1\ta\n1\tb\n%\nx\t1\n"), ParseError);
  // duplicate pattern
  CHECK_THROWS_AS(Lexicon::parse("%\n1\ta\n%\nx\t1\nx\t1\n"), ParseError);
  // malformed line reports its number
  CHECK_THROWS_WITH_AS(Lexicon::parse("%\n1\ta\nbogus line\n%\nx\t1\n"),
                       doctest::Contains("line 3"), ParseError);
  // uppercase pattern is invalid
  CHECK_THROWS_AS(Lexicon::parse("%\n1\ta\n%\nHate\t1\n"), ParseError);
}

TEST_CASE("serialize-parse round trip on the bundled lexicon") {
  std::ifstream in(demo_path());
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto lex = Lexicon::parse(ss.str());
  CHECK(lex.categories().size() == 12);
  CHECK(lex.entries().size() >= 150);

  const auto again = Lexicon::parse(lex.serialize());
  REQUIRE(again.categories().size() == lex.categories().size());
  REQUIRE(again.entries().size() == lex.entries().size());
  for (size_t i = 0; i < lex.categories().size(); ++i) {
    CHECK(again.categories()[i].id == lex.categories()[i].id);
    CHECK(again.categories()[i].name == lex.categories()[i].name);
  }
  for (size_t i = 0; i < lex.entries().size(); ++i) {
    CHECK(again.entries()[i].pattern == lex.entries()[i].pattern);
    CHECK(again.entries()[i].wildcard == lex.entries()[i].wildcard);
    CHECK(again.entries()[i].category_ids == lex.entries()[i].category_ids);
  }
  // Second serialization is byte-identical.
  CHECK(again.serialize() == lex.serialize());
}

TEST_CASE("match literal vs wildcard") {
  const auto lex = Lexicon::parse(kSmallDic);
  CHECK(lex.match("hated") == std::vector<int>{1});
  CHECK(lex.match("hate") == std::vector<int>{1});
  CHECK(lex.match("hat") == std::vector<int>{});
  CHECK(lex.match("angry") == std::vector<int>{1});
  CHECK(lex.match("angrier") == std::vector<int>{});  // literal, no prefix match
  CHECK(lex.match("friendly") == std::vector<int>{31});
}

TEST_CASE("match unions over all matching entries") {
  const Lexicon lex({{1, "anger"}, {5, "other"}},
                    {{"hate", true, {1}}, {"hated", false, {1, 5}}});
  CHECK(lex.match("hated") == std::vector<int>{1, 5});
  CHECK(lex.match("hates") == std::vector<int>{1});
}

TEST_CASE("literal `accept` does not match `acceptance`") {
  const Lexicon lex({{1, "c"}}, {{"accept", false, {1}}});
  CHECK(lex.match("accept") == std::vector<int>{1});
  CHECK(lex.match("acceptance").empty());
}

TEST_CASE("prefix property over random stems and tokens") {
  Rng rng(20240901);
  for (int trial = 0; trial < 300; ++trial) {
    const std::string stem = random_word(rng, 6);
    const Lexicon lex({{1, "c"}}, {{stem, true, {1}}});
    for (int t = 0; t < 20; ++t) {
      std::string token = rng.uniform() < 0.5 ? stem + random_word(rng, 4)
                                              : random_word(rng, 8);
      const bool starts =
          token.size() >= stem.size() && token.compare(0, stem.size(), stem) == 0;
      CHECK(lex.match(token).empty() == !starts);
    }
  }
}

TEST_CASE("trie matching equals linear scan on random lexicons") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Category> cats;
    for (int c = 1; c <= 8; ++c) cats.push_back({c, "cat" + std::to_string(c)});
    std::vector<LexiconEntry> entries;
    std::set<std::string> seen;
    const size_t n_entries = 50 + rng.index(950);
    while (entries.size() < n_entries) {
      LexiconEntry e;
      e.pattern = random_word(rng, 7);
      e.wildcard = rng.uniform() < 0.5;
      if (!seen.insert(e.pattern + (e.wildcard ? "*" : "")).second) continue;
      e.category_ids.push_back(1 + static_cast<int>(rng.index(8)));
      if (rng.uniform() < 0.2) e.category_ids.push_back(1 + static_cast<int>(rng.index(8)));
      entries.push_back(std::move(e));
    }
    const Lexicon lex(cats, entries);
    for (int t = 0; t < 200; ++t) {
      const std::string token = random_word(rng, 9);
      CHECK(lex.match(token) == match_linear(lex, token));
    }
  }
}

TEST_CASE("score_user hand count") {
  const Lexicon lex({{1, "anger"}, {31, "social"}},
                    {{"hate", true, {1}}, {"friend", true, {31}}});
  const std::vector<std::string> texts = {"I hate hateful mornings my friend"};
  const auto sv = score_user(lex, texts, 1);
  CHECK(sv.token_count == 6);
  CHECK(sv.scores[0] == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
  CHECK(sv.scores[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("score_user zero matches and insufficient text") {
  const Lexicon lex({{1, "anger"}}, {{"hate", true, {1}}});
  std::vector<std::string> texts;
  for (int i = 0; i < 30; ++i) texts.push_back("calm words only");
  const auto sv = score_user(lex, texts);
  CHECK(sv.token_count == 90);
  CHECK(sv.scores[0] == 0.0);

  const std::vector<std::string> empty_texts = {""};
  CHECK_THROWS_WITH_AS(score_user(lex, empty_texts), doctest::Contains("insufficient"),
                       DataError);
}

TEST_CASE("score bounds and additivity") {
  std::ifstream in(demo_path());
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto lex = Lexicon::parse(ss.str());

  Rng rng(5);
  const std::vector<std::string> vocab = {"hate",  "friendly", "zzz", "maybe",
                                          "happy", "qqq",      "see", "they"};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> a_texts, b_texts;
    auto fill = [&](std::vector<std::string>& out, size_t n_texts) {
      for (size_t i = 0; i < n_texts; ++i) {
        std::string text;
        const size_t words = 5 + rng.index(20);
        for (size_t k = 0; k < words; ++k) {
          text += vocab[rng.index(vocab.size())];
          text.push_back(' ');
        }
        out.push_back(text);
      }
    };
    fill(a_texts, 3 + rng.index(5));
    fill(b_texts, 3 + rng.index(5));

    const auto sa = score_user(lex, a_texts, 1);
    const auto sb = score_user(lex, b_texts, 1);
    std::vector<std::string> pooled = a_texts;
    pooled.insert(pooled.end(), b_texts.begin(), b_texts.end());
    const auto sp = score_user(lex, pooled, 1);

    CHECK(sp.token_count == sa.token_count + sb.token_count);
    for (size_t c = 0; c < sp.scores.size(); ++c) {
      CHECK(sp.scores[c] >= 0.0);
      CHECK(sp.scores[c] <= 1.0);
      const double pooled_expected =
          (sa.scores[c] * sa.token_count + sb.scores[c] * sb.token_count) /
          static_cast<double>(sp.token_count);
      CHECK(sp.scores[c] == doctest::Approx(pooled_expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("demo lexicon has clean emission words per category") {
  std::ifstream in(demo_path());
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto lex = Lexicon::parse(ss.str());
  // Every category needs several words that match it and nothing else, so the
  // corpus generator can plant signals without cross-category bleed.
  std::vector<int> clean(lex.categories().size(), 0);
  for (const auto& entry : lex.entries()) {
    if (entry.category_ids.size() != 1) continue;
    const auto m = lex.match(entry.pattern);
    if (m.size() == 1 && m[0] == entry.category_ids[0])
      ++clean[lex.category_index(m[0])];
  }
  for (size_t c = 0; c < clean.size(); ++c) {
    INFO("category ", lex.categories()[c].name);
    CHECK(clean[c] >= 6);
  }
}
