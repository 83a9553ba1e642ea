#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "engage/lexicon.hpp"

namespace engage::synth {

struct PlantedCategory {
  std::string category_name;
  double r_response = 0.0;  // in (-1, 1)
  double r_retweet = 0.0;   // in (-1, 1)
};

struct SynthConfig {
  size_t n_users = 1000;
  size_t tweets_per_user = 200;
  size_t questions_per_user = 10;
  std::vector<PlantedCategory> planted;
  double base_usage = 0.02;   // per-token emission probability per category
  double noise_sd = 0.004;    // per-user jitter on emission probabilities
  double mean_response_rate = 0.754;
  double response_rate_sd = 0.097;
  double mean_retweet_rate = 0.117;
  double retweet_rate_sd = 0.15;
  size_t min_tokens_per_tweet = 6;
  size_t max_tokens_per_tweet = 12;
  uint64_t seed = 0;

  nlohmann::json to_json() const;
};

// Every planted category resolved: the emission slopes found by calibration
// and the correlation the calibration simulation achieved with them.
struct PlantedOutcome {
  std::string category_name;
  double requested_r_response = 0.0;
  double requested_r_retweet = 0.0;
  double achieved_r_response = 0.0;
  double achieved_r_retweet = 0.0;
  double slope_response = 0.0;
  double slope_retweet = 0.0;
};

// Users are driven by two independent latent traits, one per engagement
// rate. Planted categories emit words at a probability that is affine in the
// matching latent; the slope is calibrated by bisection against a simulated
// population correlation so the pipeline-recovered r converges to the target.
// Writes the corpus as JSONL and returns a manifest with the planted ground
// truth. Fully deterministic for a given (config, lexicon).
nlohmann::json generate_corpus(const SynthConfig& config, const Lexicon& lexicon,
                               std::ostream& corpus_out);

}  // namespace engage::synth
