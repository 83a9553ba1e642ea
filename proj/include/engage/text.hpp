#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace engage::text {

// Remove every URL: a substring starting at "http://", "https://" or "www."
// and running to the next whitespace (or end of string).
std::string strip_urls(std::string_view s);

// True if the raw text carries a URL marker anywhere.
bool contains_url(std::string_view s);

// Tweet tokenization. URLs, @-mentions and #-hashtags are removed first, the
// remainder is ASCII-case-folded, and tokens are maximal runs of alphabetic
// characters with interior apostrophes ("don't" is one token).
std::vector<std::string> tokenize(std::string_view s);

}  // namespace engage::text
