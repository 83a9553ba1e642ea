#include "engage/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <unordered_set>

#include "json.hpp"

#include "engage/errors.hpp"
#include "engage/parallel.hpp"
#include "engage/text.hpp"

namespace engage {
namespace {

using nlohmann::json;

Tweet tweet_from_json(const json& j) {
  Tweet t;
  t.tweet_id = j.at("tweet_id").get<std::string>();
  t.user_id = j.at("user_id").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "authored") {
    t.kind = TweetKind::authored;
  } else if (kind == "inbound") {
    t.kind = TweetKind::inbound;
  } else {
    throw ParseError("unknown kind '" + kind + "'");
  }
  t.text = j.at("text").get<std::string>();
  if (auto it = j.find("is_retweet"); it != j.end() && !it->is_null())
    t.is_retweet = it->get<bool>();
  if (auto it = j.find("in_reply_to"); it != j.end() && !it->is_null())
    t.in_reply_to = it->get<std::string>();
  if (t.tweet_id.empty()) throw ParseError("empty tweet_id");
  if (t.user_id.empty()) throw ParseError("empty user_id");
  return t;
}

}  // namespace

std::vector<UserRecord> load_corpus(std::istream& in, LoadMode mode, LoadStats* stats) {
  LoadStats local;
  LoadStats& st = stats ? *stats : local;
  std::map<std::string, UserRecord> by_user;
  std::unordered_set<std::string> seen_ids;

  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++st.lines;
    Tweet t;
    try {
      const json j = json::parse(line);
      t = tweet_from_json(j);
      if (!seen_ids.insert(t.tweet_id).second)
        throw ParseError("duplicate tweet_id '" + t.tweet_id + "'");
    } catch (const std::exception& e) {
      const std::string msg = "corpus line " + std::to_string(lineno) + ": " + e.what();
      if (mode == LoadMode::strict) throw ParseError(msg);
      ++st.skipped;
      st.errors.push_back(msg);
      continue;
    }
    auto& rec = by_user[t.user_id];
    rec.user_id = t.user_id;
    (t.kind == TweetKind::authored ? rec.timeline : rec.inbound).push_back(std::move(t));
  }

  std::vector<UserRecord> records;
  records.reserve(by_user.size());
  for (auto& [_, rec] : by_user) records.push_back(std::move(rec));
  return records;  // std::map keeps user_id order
}

std::vector<UserRecord> load_corpus_file(const std::string& path, LoadMode mode,
                                         LoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open corpus file: " + path);
  return load_corpus(in, mode, stats);
}

bool is_question(std::string_view text) {
  return text::strip_urls(text).find('?') != std::string::npos;
}

ResponseCounts count_responses(const UserRecord& record) {
  ResponseCounts rc;
  std::unordered_set<std::string_view> replied_to;
  for (const auto& t : record.timeline) {
    if (t.in_reply_to) replied_to.insert(*t.in_reply_to);
  }
  for (const auto& q : record.inbound) {
    if (q.is_retweet || text::contains_url(q.text) || !is_question(q.text)) continue;
    ++rc.eligible;
    if (replied_to.count(q.tweet_id)) ++rc.answered;  // distinct questions only
  }
  return rc;
}

std::optional<double> compute_response_rate(const UserRecord& record) {
  const auto rc = count_responses(record);
  if (rc.eligible == 0) return std::nullopt;
  return static_cast<double>(rc.answered) / static_cast<double>(rc.eligible);
}

double compute_retweet_rate(const UserRecord& record) {
  if (record.timeline.empty()) throw DataError("no tweets for user " + record.user_id);
  size_t retweets = 0;
  for (const auto& t : record.timeline)
    if (t.is_retweet) ++retweets;
  return static_cast<double>(retweets) / static_cast<double>(record.timeline.size());
}

ProfileSet build_profiles(const std::vector<UserRecord>& records, const Lexicon& lexicon,
                          const ProfileThresholds& thresholds, unsigned threads) {
  if (lexicon.categories().empty()) throw DataError("empty lexicon");

  ProfileSet set;
  set.categories = lexicon.categories();
  set.exclusions.input_users = records.size();

  struct Slot {
    bool kept = false;
    bool few_tweets = false;
    EngagementProfile profile;
  };
  std::vector<Slot> slots(records.size());

  parallel_for(records.size(), threads, [&](size_t i) {
    const auto& rec = records[i];
    Slot& slot = slots[i];
    if (rec.timeline.size() < std::max<size_t>(thresholds.min_tweets, 1)) {
      slot.few_tweets = true;
      return;
    }
    std::vector<std::string> eligible_texts;
    eligible_texts.reserve(rec.timeline.size());
    for (const auto& t : rec.timeline) {
      if (!t.is_retweet) eligible_texts.push_back(t.text);
    }
    EngagementProfile p;
    p.user_id = rec.user_id;
    try {
      p.scores = score_user(lexicon, eligible_texts, thresholds.min_tokens);
    } catch (const DataError&) {
      return;  // insufficient text
    }
    p.scores.user_id = rec.user_id;
    p.retweet_rate = compute_retweet_rate(rec);
    const auto rc = count_responses(rec);
    if (rc.eligible >= std::max<size_t>(thresholds.min_questions, 1)) {
      p.response_rate = static_cast<double>(rc.answered) / static_cast<double>(rc.eligible);
    }
    slot.kept = true;
    slot.profile = std::move(p);
  });

  for (auto& slot : slots) {
    if (slot.kept) {
      set.profiles.push_back(std::move(slot.profile));
    } else if (slot.few_tweets) {
      ++set.exclusions.few_tweets;
    } else {
      ++set.exclusions.insufficient_text;
    }
  }
  std::sort(set.profiles.begin(), set.profiles.end(),
            [](const auto& a, const auto& b) { return a.user_id < b.user_id; });
  return set;
}

void write_profiles_tsv(std::ostream& os, const ProfileSet& set, const ReportMeta& meta) {
  write_meta_tsv(os, meta);
  os << "user_id\tresponse_rate\tretweet_rate\ttoken_count";
  for (const auto& cat : set.categories) os << '\t' << cat.name;
  os << '\n';
  for (const auto& p : set.profiles) {
    os << p.user_id << '\t';
    if (p.response_rate) os << format_fixed(*p.response_rate, 6);
    os << '\t' << format_fixed(p.retweet_rate, 6) << '\t' << p.scores.token_count;
    for (double s : p.scores.scores) os << '\t' << format_fixed(s, 6);
    os << '\n';
  }
}

}  // namespace engage
