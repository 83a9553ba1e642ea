#include "engage/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "engage/errors.hpp"
#include "engage/text.hpp"

namespace engage {
namespace {

bool is_lower_alpha(char c) { return c >= 'a' && c <= 'z'; }

std::vector<std::string> split_tab(std::string_view line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

[[noreturn]] void fail_line(size_t lineno, const std::string& what) {
  throw ParseError("lexicon line " + std::to_string(lineno) + ": " + what);
}

}  // namespace

Lexicon::Lexicon(std::vector<Category> categories, std::vector<LexiconEntry> entries)
    : categories_(std::move(categories)), entries_(std::move(entries)) {
  std::unordered_set<int> ids;
  std::unordered_set<std::string> names;
  for (const auto& cat : categories_) {
    if (cat.id <= 0) throw ParseError("category id must be positive: " + std::to_string(cat.id));
    if (cat.name.empty()) throw ParseError("empty category name");
    if (!ids.insert(cat.id).second)
      throw ParseError("duplicate category id: " + std::to_string(cat.id));
    if (!names.insert(cat.name).second)
      throw ParseError("duplicate category name: " + cat.name);
  }
  std::unordered_set<std::string> patterns;
  for (auto& entry : entries_) {
    if (entry.pattern.empty()) throw ParseError("empty pattern");
    for (char c : entry.pattern) {
      if (!is_lower_alpha(c) && c != '\'')
        throw ParseError("pattern has invalid character: " + entry.pattern_text());
    }
    if (!patterns.insert(entry.pattern_text()).second)
      throw ParseError("duplicate pattern: " + entry.pattern_text());
    if (entry.category_ids.empty())
      throw ParseError("pattern with no categories: " + entry.pattern_text());
    std::sort(entry.category_ids.begin(), entry.category_ids.end());
    entry.category_ids.erase(
        std::unique(entry.category_ids.begin(), entry.category_ids.end()),
        entry.category_ids.end());
    for (int id : entry.category_ids) {
      if (!ids.count(id))
        throw ParseError("pattern " + entry.pattern_text() +
                         " references unknown category " + std::to_string(id));
    }
  }
  build_trie();
}

Lexicon Lexicon::parse(std::string_view t) {
  std::vector<Category> categories;
  std::vector<LexiconEntry> entries;

  std::istringstream in{std::string(t)};
  std::string line;
  size_t lineno = 0;
  int section = 0;  // 0: before first %, 1: categories, 2: entries
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "%") {
      ++section;
      if (section > 2) fail_line(lineno, "unexpected '%'");
      continue;
    }
    if (section == 0) fail_line(lineno, "expected '%' header");
    auto fields = split_tab(line);
    if (section == 1) {
      if (fields.size() != 2) fail_line(lineno, "expected <id><TAB><name>");
      int id = 0;
      try {
        size_t used = 0;
        id = std::stoi(fields[0], &used);
        if (used != fields[0].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail_line(lineno, "bad category id '" + fields[0] + "'");
      }
      if (id <= 0) fail_line(lineno, "category id must be positive");
      if (fields[1].empty()) fail_line(lineno, "empty category name");
      categories.push_back({id, fields[1]});
    } else {
      if (fields.size() < 2) fail_line(lineno, "expected <pattern><TAB><id>...");
      std::string pattern = fields[0];
      bool wildcard = false;
      if (!pattern.empty() && pattern.back() == '*') {
        wildcard = true;
        pattern.pop_back();
      }
      if (pattern.find('*') != std::string::npos)
        fail_line(lineno, "'*' allowed only as the final character");
      if (pattern.empty()) fail_line(lineno, "empty pattern");
      for (char c : pattern) {
        if (!is_lower_alpha(c) && c != '\'')
          fail_line(lineno, "pattern has invalid character '" + std::string(1, c) + "'");
      }
      std::vector<int> cat_ids;
      for (size_t i = 1; i < fields.size(); ++i) {
        try {
          size_t used = 0;
          int id = std::stoi(fields[i], &used);
          if (used != fields[i].size()) throw std::invalid_argument("");
          cat_ids.push_back(id);
        } catch (const std::exception&) {
          fail_line(lineno, "bad category id '" + fields[i] + "'");
        }
      }
      entries.push_back({std::move(pattern), wildcard, std::move(cat_ids)});
    }
  }
  if (section < 2) throw ParseError("lexicon: missing '%' section separators");

  try {
    return Lexicon(std::move(categories), std::move(entries));
  } catch (const ParseError& e) {
    throw ParseError(std::string("lexicon: ") + e.what());
  }
}

Lexicon Lexicon::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open lexicon file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Lexicon::serialize() const {
  std::ostringstream out;
  out << "%\n";
  for (const auto& cat : categories_) out << cat.id << '\t' << cat.name << '\n';
  out << "%\n";
  for (const auto& entry : entries_) {
    out << entry.pattern_text();
    for (int id : entry.category_ids) out << '\t' << id;
    out << '\n';
  }
  return out.str();
}

size_t Lexicon::category_index(int id) const {
  for (size_t i = 0; i < categories_.size(); ++i)
    if (categories_[i].id == id) return i;
  throw DataError("unknown category id: " + std::to_string(id));
}

size_t Lexicon::category_index_by_name(std::string_view name) const {
  for (size_t i = 0; i < categories_.size(); ++i)
    if (categories_[i].name == name) return i;
  return npos;
}

int Lexicon::char_slot(char c) {
  if (c >= 'a' && c <= 'z') return c - 'a';
  if (c == '\'') return 26;
  return -1;
}

void Lexicon::build_trie() {
  trie_.clear();
  trie_.emplace_back();
  for (const auto& entry : entries_) {
    int node = 0;
    for (char c : entry.pattern) {
      const int slot = char_slot(c);
      if (trie_[node].children[slot] < 0) {
        trie_[node].children[slot] = static_cast<int>(trie_.size());
        trie_.emplace_back();
      }
      node = trie_[node].children[slot];
    }
    auto& ids = entry.wildcard ? trie_[node].wildcard_ids : trie_[node].exact_ids;
    ids.insert(ids.end(), entry.category_ids.begin(), entry.category_ids.end());
  }
}

std::vector<int> Lexicon::match(std::string_view token) const {
  std::vector<int> hits;
  int node = 0;
  size_t depth = 0;
  for (; depth < token.size(); ++depth) {
    const int slot = char_slot(token[depth]);
    if (slot < 0) break;
    const int next = trie_[node].children[slot];
    if (next < 0) break;
    node = next;
    // A wildcard stem ending here matches any token it prefixes.
    const auto& wild = trie_[node].wildcard_ids;
    hits.insert(hits.end(), wild.begin(), wild.end());
  }
  if (depth == token.size()) {
    const auto& exact = trie_[node].exact_ids;
    hits.insert(hits.end(), exact.begin(), exact.end());
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  return hits;
}

ScoreVector score_user(const Lexicon& lexicon, std::span<const std::string> texts,
                       size_t min_tokens) {
  std::vector<size_t> counts(lexicon.categories().size(), 0);
  size_t total = 0;
  for (const auto& text : texts) {
    for (const auto& token : text::tokenize(text)) {
      ++total;
      for (int id : lexicon.match(token)) ++counts[lexicon.category_index(id)];
    }
  }
  if (total < min_tokens) throw DataError("insufficient text");
  ScoreVector sv;
  sv.token_count = total;
  sv.scores.resize(counts.size());
  for (size_t i = 0; i < counts.size(); ++i)
    sv.scores[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return sv;
}

}  // namespace engage
