#include "engage/text.hpp"

#include <array>
#include <cctype>

namespace engage::text {
namespace {

constexpr std::array<std::string_view, 3> kUrlMarkers = {"http://", "https://", "www."};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

size_t find_url_start(std::string_view s, size_t from) {
  size_t best = std::string_view::npos;
  for (auto marker : kUrlMarkers) {
    size_t pos = s.find(marker, from);
    if (pos < best) best = pos;
  }
  return best;
}

// Erase a marker-introduced span: '@'/'#' followed by word characters.
std::string strip_marker_spans(std::string_view s, char marker) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size();) {
    if (s[i] == marker && i + 1 < s.size() && is_word_char(s[i + 1])) {
      i += 1;
      while (i < s.size() && is_word_char(s[i])) ++i;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

std::string strip_urls(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    size_t hit = find_url_start(s, i);
    if (hit == std::string_view::npos) {
      out.append(s.substr(i));
      break;
    }
    out.append(s.substr(i, hit - i));
    i = hit;
    while (i < s.size() && !is_space(s[i])) ++i;
  }
  return out;
}

bool contains_url(std::string_view s) {
  return find_url_start(s, 0) != std::string_view::npos;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::string cleaned = strip_urls(s);
  cleaned = strip_marker_spans(cleaned, '@');
  cleaned = strip_marker_spans(cleaned, '#');
  for (char& c : cleaned) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    // An apostrophe is only kept between letters; trim any trailing one.
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    if (!cur.empty()) tokens.push_back(cur);
    cur.clear();
  };
  for (size_t i = 0; i < cleaned.size(); ++i) {
    const char c = cleaned[i];
    if (is_alpha(c)) {
      cur.push_back(c);
    } else if (c == '\'' && !cur.empty()) {
      cur.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

}  // namespace engage::text
