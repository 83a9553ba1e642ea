#include "engage/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "engage/errors.hpp"
#include "engage/rng.hpp"

namespace engage::synth {
namespace {

using nlohmann::json;

constexpr double kPiCap = 0.9;       // hard ceiling on any emission probability
constexpr size_t kSimUsers = 30000;  // calibration simulation size

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

// E[ clip01(mu + sigma * Z) ] for standard normal Z, in closed form.
double clipped_mean(double mu, double sigma) {
  if (sigma <= 0.0) return clip01(mu);
  const double alpha = (0.0 - mu) / sigma;
  const double beta = (1.0 - mu) / sigma;
  return mu * (normal_cdf(beta) - normal_cdf(alpha)) +
         sigma * (normal_pdf(alpha) - normal_pdf(beta)) + 1.0 - normal_cdf(beta);
}

// Find mu so that E[clip01(mu + sigma Z)] equals the requested mean.
double anchor_mu(double target_mean, double sigma) {
  if (sigma <= 0.0) return target_mean;
  double lo = -4.0, hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (clipped_mean(mid, sigma) < target_mean ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double pearson_quick(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// Common-random-number sketch of the full generative process, reused across
// bisection evaluations so r(a, b) is a smooth deterministic function.
struct CalibrationSim {
  const SynthConfig& cfg;
  double mu_resp, mu_rt;
  // Per simulated user draws.
  std::vector<double> z, w, eps, g_score, g_resp, g_rt;
  std::vector<double> realized_resp, realized_rt, eligible_tokens;

  CalibrationSim(const SynthConfig& config, double mu_resp0, double mu_rt0)
      : cfg(config), mu_resp(mu_resp0), mu_rt(mu_rt0) {
    const size_t m = kSimUsers;
    Rng rng(Rng::derive(cfg.seed, 0xca11b));
    z.resize(m);
    w.resize(m);
    eps.resize(m);
    g_score.resize(m);
    g_resp.resize(m);
    g_rt.resize(m);
    realized_resp.resize(m);
    realized_rt.resize(m);
    eligible_tokens.resize(m);
    const double t = static_cast<double>(cfg.tweets_per_user);
    const double q = static_cast<double>(cfg.questions_per_user);
    const double tpt =
        0.5 * static_cast<double>(cfg.min_tokens_per_tweet + cfg.max_tokens_per_tweet);
    for (size_t i = 0; i < m; ++i) {
      z[i] = rng.normal();
      w[i] = rng.normal();
      eps[i] = rng.normal();
      g_score[i] = rng.normal();
      g_resp[i] = rng.normal();
      g_rt[i] = rng.normal();
      const double p_resp = clip01(mu_resp + cfg.response_rate_sd * z[i]);
      const double answered =
          q > 0.0
              ? std::clamp(q * p_resp + std::sqrt(q * p_resp * (1.0 - p_resp)) * g_resp[i],
                           0.0, q)
              : 0.0;
      realized_resp[i] = q > 0.0 ? answered / q : 0.0;
      const double p_rt = clip01(mu_rt + cfg.retweet_rate_sd * w[i]);
      const double retweets =
          std::clamp(t * p_rt + std::sqrt(t * p_rt * (1.0 - p_rt)) * g_rt[i], 0.0, t);
      realized_rt[i] = retweets / (t + answered);
      eligible_tokens[i] = std::max(1.0, tpt * (t - retweets + answered));
    }
  }

  // Population correlation estimates for emission slopes (a on the response
  // latent, b on the retweet latent).
  std::pair<double, double> correlations(double a, double b) const {
    const size_t m = z.size();
    std::vector<double> score(m);
    for (size_t i = 0; i < m; ++i) {
      const double pi = std::clamp(
          cfg.base_usage + a * z[i] + b * w[i] + cfg.noise_sd * eps[i], 0.0, kPiCap);
      const double mult_sd = std::sqrt(pi * (1.0 - pi) / eligible_tokens[i]);
      score[i] = clip01(pi + mult_sd * g_score[i]);
    }
    const double r1 = cfg.questions_per_user > 0 ? pearson_quick(score, realized_resp) : 0.0;
    const double r2 = pearson_quick(score, realized_rt);
    return {r1, r2};
  }
};

// Bisection on one slope holding the other fixed; r is monotone in the slope.
double solve_slope(const CalibrationSim& sim, bool response_axis, double target,
                   double other_slope, double max_slope, const std::string& name) {
  auto eval = [&](double s) {
    const auto [r1, r2] = response_axis ? sim.correlations(s, other_slope)
                                        : sim.correlations(other_slope, s);
    return response_axis ? r1 : r2;
  };
  const double r_lo = eval(-max_slope);
  const double r_hi = eval(max_slope);
  if (target < r_lo || target > r_hi) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "calibration infeasible for category '%s': target r=%.3f outside "
                  "achievable [%.3f, %.3f]; reduce noise_sd or the target",
                  name.c_str(), target, r_lo, r_hi);
    throw DataError(buf);
  }
  double lo = -max_slope, hi = max_slope;
  for (int i = 0; i < 48; ++i) {
    const double mid = 0.5 * (lo + hi);
    (eval(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::string pad_number(size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*zu", width, v);
  return buf;
}

// Gibberish filler vocabulary; every word is checked against the lexicon so
// filler can never produce a category hit.
std::vector<std::string> make_filler_pool(const Lexicon& lexicon, uint64_t seed) {
  static const char* kConsonants = "bcdfgjklmnprstvz";
  static const char* kVowels = "aeiou";
  Rng rng(Rng::derive(seed, 0xf111e7));
  std::vector<std::string> pool;
  pool.reserve(400);
  int guard = 0;
  while (pool.size() < 400 && guard < 100000) {
    ++guard;
    std::string word;
    const size_t syllables = 2 + rng.index(3);
    for (size_t s = 0; s < syllables; ++s) {
      word.push_back(kConsonants[rng.index(16)]);
      word.push_back(kVowels[rng.index(5)]);
    }
    if (lexicon.match(word).empty()) pool.push_back(std::move(word));
  }
  if (pool.size() < 400) throw DataError("could not build a lexicon-free filler pool");
  return pool;
}

// Emission vocabulary per category: words that match exactly that category
// and nothing else, so planting one category never bleeds into another.
std::vector<std::vector<std::string>> make_emission_words(const Lexicon& lexicon) {
  const auto& cats = lexicon.categories();
  std::vector<std::vector<std::string>> words(cats.size());
  static const char* kSuffixes[] = {"", "s", "ed", "ing"};
  for (const auto& entry : lexicon.entries()) {
    if (entry.category_ids.size() != 1) continue;
    const size_t idx = lexicon.category_index(entry.category_ids[0]);
    if (entry.wildcard) {
      for (const char* suffix : kSuffixes) {
        const std::string w = entry.pattern + suffix;
        const auto m = lexicon.match(w);
        if (m.size() == 1 && m[0] == entry.category_ids[0]) words[idx].push_back(w);
      }
    } else {
      const auto m = lexicon.match(entry.pattern);
      if (m.size() == 1 && m[0] == entry.category_ids[0])
        words[idx].push_back(entry.pattern);
    }
  }
  return words;
}

json tweet_json(const std::string& tweet_id, const std::string& user_id,
                const char* kind, const std::string& text, bool is_retweet,
                const std::string* in_reply_to) {
  json j{{"tweet_id", tweet_id}, {"user_id", user_id},     {"kind", kind},
         {"text", text},         {"is_retweet", is_retweet}};
  if (in_reply_to) {
    j["in_reply_to"] = *in_reply_to;
  } else {
    j["in_reply_to"] = nullptr;
  }
  return j;
}

}  // namespace

json SynthConfig::to_json() const {
  json planted_json = json::array();
  for (const auto& p : planted) {
    planted_json.push_back({{"category", p.category_name},
                            {"r_response", p.r_response},
                            {"r_retweet", p.r_retweet}});
  }
  return {{"n_users", n_users},
          {"tweets_per_user", tweets_per_user},
          {"questions_per_user", questions_per_user},
          {"planted", planted_json},
          {"base_usage", base_usage},
          {"noise_sd", noise_sd},
          {"mean_response_rate", mean_response_rate},
          {"response_rate_sd", response_rate_sd},
          {"mean_retweet_rate", mean_retweet_rate},
          {"retweet_rate_sd", retweet_rate_sd},
          {"min_tokens_per_tweet", min_tokens_per_tweet},
          {"max_tokens_per_tweet", max_tokens_per_tweet},
          {"seed", seed}};
}

json generate_corpus(const SynthConfig& cfg, const Lexicon& lexicon,
                     std::ostream& corpus_out) {
  const auto& cats = lexicon.categories();
  if (cfg.n_users == 0) throw DataError("synth: n_users must be positive");
  if (cfg.n_users > 99999) throw DataError("synth: n_users capped at 99999");
  if (cfg.tweets_per_user == 0) throw DataError("synth: tweets_per_user must be positive");
  if (cfg.min_tokens_per_tweet < 1 || cfg.max_tokens_per_tweet < cfg.min_tokens_per_tweet)
    throw DataError("synth: bad tokens-per-tweet range");
  if (cfg.base_usage <= 0.0 || cfg.base_usage * static_cast<double>(cats.size()) > 0.85)
    throw DataError("synth: base_usage out of range for this lexicon size");
  if (cfg.noise_sd <= 0.0) throw DataError("synth: noise_sd must be positive");
  if (cfg.mean_response_rate < 0.0 || cfg.mean_response_rate > 1.0 ||
      cfg.mean_retweet_rate < 0.0 || cfg.mean_retweet_rate > 1.0)
    throw DataError("synth: mean rates must lie in [0, 1]");
  if (cfg.response_rate_sd < 0.0 || cfg.retweet_rate_sd < 0.0)
    throw DataError("synth: rate spreads must be non-negative");

  // Resolve planted names to category columns.
  std::vector<double> slope_resp(cats.size(), 0.0), slope_rt(cats.size(), 0.0);
  std::vector<PlantedOutcome> outcomes;
  std::vector<size_t> planted_idx;
  for (const auto& p : cfg.planted) {
    const size_t idx = lexicon.category_index_by_name(p.category_name);
    if (idx == Lexicon::npos)
      throw DataError("synth: planted category '" + p.category_name +
                      "' not in the lexicon");
    if (std::fabs(p.r_response) >= 1.0 || std::fabs(p.r_retweet) >= 1.0)
      throw DataError("synth: target r must lie in (-1, 1)");
    if (p.r_response != 0.0 && cfg.questions_per_user == 0)
      throw DataError("synth: cannot plant a response correlation with zero questions per user");
    planted_idx.push_back(idx);
    PlantedOutcome out;
    out.category_name = p.category_name;
    out.requested_r_response = p.r_response;
    out.requested_r_retweet = p.r_retweet;
    outcomes.push_back(out);
  }

  const double mu_resp = anchor_mu(cfg.mean_response_rate, cfg.response_rate_sd);
  // Replies add authored tweets, diluting the retweet ratio; anchor the
  // latent so the realized mean still lands on the requested one.
  const double reply_dilution =
      (static_cast<double>(cfg.tweets_per_user) +
       static_cast<double>(cfg.questions_per_user) * cfg.mean_response_rate) /
      static_cast<double>(cfg.tweets_per_user);
  const double mu_rt = anchor_mu(std::min(1.0, cfg.mean_retweet_rate * reply_dilution),
                                 cfg.retweet_rate_sd);

  // Calibrate emission slopes against the simulated population.
  if (!cfg.planted.empty()) {
    CalibrationSim sim(cfg, mu_resp, mu_rt);
    const double max_slope = 2.0 * cfg.base_usage;
    for (size_t i = 0; i < cfg.planted.size(); ++i) {
      const auto& p = cfg.planted[i];
      double a = 0.0, b = 0.0;
      // Slopes interact only through the score variance, so one pass is
      // enough unless both targets are active.
      const int rounds = (p.r_response != 0.0 && p.r_retweet != 0.0) ? 3 : 1;
      for (int round = 0; round < rounds; ++round) {
        if (p.r_response != 0.0)
          a = solve_slope(sim, true, p.r_response, b, max_slope, p.category_name);
        if (p.r_retweet != 0.0)
          b = solve_slope(sim, false, p.r_retweet, a, max_slope, p.category_name);
      }
      const auto [r1, r2] = sim.correlations(a, b);
      outcomes[i].slope_response = a;
      outcomes[i].slope_retweet = b;
      outcomes[i].achieved_r_response = r1;
      outcomes[i].achieved_r_retweet = r2;
      slope_resp[planted_idx[i]] = a;
      slope_rt[planted_idx[i]] = b;
    }
  }

  const auto filler = make_filler_pool(lexicon, cfg.seed);
  const auto emission = make_emission_words(lexicon);
  for (size_t i = 0; i < cfg.planted.size(); ++i) {
    if ((slope_resp[planted_idx[i]] != 0.0 || slope_rt[planted_idx[i]] != 0.0) &&
        emission[planted_idx[i]].empty())
      throw DataError("synth: category '" + cfg.planted[i].category_name +
                      "' has no uniquely-matching words to emit");
  }

  const int id_width = 5;
  const size_t token_span = cfg.max_tokens_per_tweet - cfg.min_tokens_per_tweet + 1;

  for (size_t u = 0; u < cfg.n_users; ++u) {
    Rng rng(Rng::derive(cfg.seed, 1000 + u));
    const std::string user_id = "u" + pad_number(u, id_width);

    const double z = rng.normal();
    const double w = rng.normal();
    std::vector<double> pi(cats.size());
    double pi_sum = 0.0;
    for (size_t c = 0; c < cats.size(); ++c) {
      pi[c] = std::clamp(cfg.base_usage + slope_resp[c] * z + slope_rt[c] * w +
                             cfg.noise_sd * rng.normal(),
                         0.0, kPiCap);
      if (emission[c].empty()) pi[c] = 0.0;  // nothing clean to emit
      pi_sum += pi[c];
    }
    if (pi_sum > 0.98)
      throw DataError("synth: emission probabilities exceed the token budget");

    const double p_resp = clip01(mu_resp + cfg.response_rate_sd * z);
    const double p_rt = clip01(mu_rt + cfg.retweet_rate_sd * w);

    auto compose = [&](size_t n_tokens) {
      std::string text;
      for (size_t t = 0; t < n_tokens; ++t) {
        if (t > 0) text.push_back(' ');
        double u01 = rng.uniform();
        bool emitted = false;
        for (size_t c = 0; c < cats.size(); ++c) {
          if (u01 < pi[c]) {
            text += emission[c][rng.index(emission[c].size())];
            emitted = true;
            break;
          }
          u01 -= pi[c];
        }
        if (!emitted) text += filler[rng.index(filler.size())];
      }
      return text;
    };
    auto filler_text = [&](size_t n_tokens) {
      std::string text;
      for (size_t t = 0; t < n_tokens; ++t) {
        if (t > 0) text.push_back(' ');
        text += filler[rng.index(filler.size())];
      }
      return text;
    };

    // Timeline.
    for (size_t t = 0; t < cfg.tweets_per_user; ++t) {
      const std::string tweet_id = user_id + "-t" + pad_number(t, 4);
      const bool retweet = rng.uniform() < p_rt;
      std::string text;
      if (retweet) {
        text = "RT " + filler_text(cfg.min_tokens_per_tweet + rng.index(token_span));
      } else {
        text = compose(cfg.min_tokens_per_tweet + rng.index(token_span));
        // Light non-lexical texture; stripped before any scoring.
        const double garnish = rng.uniform();
        if (garnish < 0.03) {
          text += " http://t.co/" + filler[rng.index(filler.size())];
        } else if (garnish < 0.05) {
          text += " #" + filler[rng.index(filler.size())];
        }
      }
      corpus_out << tweet_json(tweet_id, user_id, "authored", text, retweet, nullptr)
                        .dump()
                 << '\n';
    }

    // Inbound questions and their replies.
    for (size_t q = 0; q < cfg.questions_per_user; ++q) {
      const std::string question_id = user_id + "-q" + pad_number(q, 3);
      const std::string question_text = filler_text(4 + rng.index(6)) + "?";
      const bool answered = rng.uniform() < p_resp;
      if (answered) {
        const std::string reply_id = user_id + "-r" + pad_number(q, 3);
        const std::string reply_text =
            compose(cfg.min_tokens_per_tweet + rng.index(token_span));
        corpus_out << tweet_json(reply_id, user_id, "authored", reply_text, false,
                                 &question_id)
                          .dump()
                   << '\n';
      }
      corpus_out << tweet_json(question_id, user_id, "inbound", question_text, false,
                               nullptr)
                        .dump()
                 << '\n';
    }
  }

  json planted_json = json::array();
  for (const auto& out : outcomes) {
    planted_json.push_back({{"category", out.category_name},
                            {"requested_r_response", out.requested_r_response},
                            {"requested_r_retweet", out.requested_r_retweet},
                            {"achieved_r_response", out.achieved_r_response},
                            {"achieved_r_retweet", out.achieved_r_retweet},
                            {"slope_response", out.slope_response},
                            {"slope_retweet", out.slope_retweet}});
  }
  return {{"config", cfg.to_json()},
          {"planted", planted_json},
          {"anchors", {{"mu_response", mu_resp}, {"mu_retweet", mu_rt}}},
          {"seed", cfg.seed}};
}

}  // namespace engage::synth
