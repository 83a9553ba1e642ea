#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace engage {

struct Category {
  int id = 0;
  std::string name;
};

struct LexiconEntry {
  std::string pattern;            // lowercase word, '*' suffix already removed
  bool wildcard = false;          // true if the source pattern ended in '*'
  std::vector<int> category_ids;  // sorted, unique, non-empty

  std::string pattern_text() const { return wildcard ? pattern + "*" : pattern; }
};

// A word-category dictionary. Patterns are either literal words or
// trailing-wildcard stems; each pattern maps to one or more categories.
// Immutable after construction and safe to share across threads.
class Lexicon {
 public:
  // Validating constructor; throws ParseError on any invariant violation.
  Lexicon(std::vector<Category> categories, std::vector<LexiconEntry> entries);

  // Dictionary file format:
  //   %
  //   <id><TAB><name>
  //   %
  //   <pattern><TAB><id>[<TAB><id>...]
  static Lexicon parse(std::string_view text);
  static Lexicon parse_file(const std::string& path);
  std::string serialize() const;

  const std::vector<Category>& categories() const { return categories_; }
  const std::vector<LexiconEntry>& entries() const { return entries_; }

  // Position of a category id in the declared order; throws if unknown.
  size_t category_index(int id) const;
  // Index by name; returns npos when absent.
  static constexpr size_t npos = static_cast<size_t>(-1);
  size_t category_index_by_name(std::string_view name) const;

  // All category ids whose pattern matches the (already case-folded) token:
  // literals by equality, wildcard stems by prefix. Sorted, unique.
  std::vector<int> match(std::string_view token) const;

 private:
  struct TrieNode {
    int children[27];  // 'a'..'z' plus apostrophe
    std::vector<int> wildcard_ids;
    std::vector<int> exact_ids;
    TrieNode() { for (int& c : children) c = -1; }
  };
  static int char_slot(char c);
  void build_trie();

  std::vector<Category> categories_;
  std::vector<LexiconEntry> entries_;
  std::vector<TrieNode> trie_;
};

struct ScoreVector {
  std::string user_id;
  std::vector<double> scores;  // aligned with Lexicon::categories() order
  size_t token_count = 0;
};

// Pool all texts, tokenize, and compute per-category occurrence ratios:
// score_c = (# tokens matching category c) / (total tokens). A token matching
// several categories counts once toward each. Throws DataError("insufficient
// text") when fewer than min_tokens tokens survive tokenization.
ScoreVector score_user(const Lexicon& lexicon, std::span<const std::string> texts,
                       size_t min_tokens = 25);

}  // namespace engage
