#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "engage/lexicon.hpp"
#include "engage/report.hpp"

namespace engage {

enum class TweetKind { authored, inbound };

struct Tweet {
  std::string tweet_id;
  std::string user_id;  // owner of the record (target user for inbound tweets)
  TweetKind kind = TweetKind::authored;
  std::string text;
  bool is_retweet = false;
  std::optional<std::string> in_reply_to;
};

struct UserRecord {
  std::string user_id;
  std::vector<Tweet> timeline;  // authored, input order
  std::vector<Tweet> inbound;   // directed at the user, input order
};

enum class LoadMode { strict, lenient };

struct LoadStats {
  size_t lines = 0;
  size_t skipped = 0;  // lenient mode only
  std::vector<std::string> errors;
};

// One JSON object per line:
//   {"tweet_id":"t1","user_id":"u1","kind":"authored","text":"...",
//    "is_retweet":false,"in_reply_to":null}
// Unknown fields are ignored. Records come back sorted by user_id.
std::vector<UserRecord> load_corpus(std::istream& in, LoadMode mode = LoadMode::strict,
                                    LoadStats* stats = nullptr);
std::vector<UserRecord> load_corpus_file(const std::string& path,
                                         LoadMode mode = LoadMode::strict,
                                         LoadStats* stats = nullptr);

// True iff the URL-stripped text contains a '?' character.
bool is_question(std::string_view text);

struct ResponseCounts {
  size_t eligible = 0;  // inbound, not retweet, URL-free, question-marked
  size_t answered = 0;  // distinct eligible questions with an authored reply
};
ResponseCounts count_responses(const UserRecord& record);

// answered / eligible; absent when the user received no eligible questions.
std::optional<double> compute_response_rate(const UserRecord& record);

// (# authored retweets) / (# authored tweets); throws DataError on an empty
// timeline.
double compute_retweet_rate(const UserRecord& record);

struct ProfileThresholds {
  size_t min_tweets = 10;     // authored tweets required to keep a user
  size_t min_tokens = 25;     // tokens required for a stable score vector
  size_t min_questions = 1;   // eligible questions required to report a response rate
};

struct EngagementProfile {
  std::string user_id;
  std::optional<double> response_rate;
  double retweet_rate = 0.0;
  ScoreVector scores;
};

struct ExclusionReport {
  size_t input_users = 0;
  size_t few_tweets = 0;
  size_t insufficient_text = 0;
};

struct ProfileSet {
  std::vector<Category> categories;  // score column order
  std::vector<EngagementProfile> profiles;
  ExclusionReport exclusions;
};

// Scores are computed over authored non-retweet texts only. Users under the
// activity thresholds are dropped and counted. Output sorted by user_id.
ProfileSet build_profiles(const std::vector<UserRecord>& records, const Lexicon& lexicon,
                          const ProfileThresholds& thresholds = {}, unsigned threads = 1);

// TSV: user_id, response_rate (empty when absent), retweet_rate, token_count,
// then one column per category name.
void write_profiles_tsv(std::ostream& os, const ProfileSet& set, const ReportMeta& meta);

}  // namespace engage
