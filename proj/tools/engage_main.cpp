// Command-line front end for the engagement-from-word-use pipeline:
//   lexicon-validate, score, rates, correlate, train, cv, synth.
// Exit codes: 0 success, 1 input error, 2 degenerate-data error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "engage/corpus.hpp"
#include "engage/errors.hpp"
#include "engage/eval.hpp"
#include "engage/lexicon.hpp"
#include "engage/models.hpp"
#include "engage/report.hpp"
#include "engage/stats.hpp"
#include "engage/synth.hpp"

namespace {

using namespace engage;
using nlohmann::json;

struct CommonOpts {
  std::string corpus_path;
  std::string lexicon_path;
  std::string output_path;  // empty = stdout
  std::string format = "tsv";
  bool strict = false;
  unsigned threads = 1;
  uint64_t seed = 0;
  ProfileThresholds thresholds;
};

void add_threshold_flags(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--min-tweets", opts.thresholds.min_tweets,
                  "Minimum authored tweets per user");
  cmd->add_option("--min-tokens", opts.thresholds.min_tokens,
                  "Minimum tokens per user for scoring");
  cmd->add_option("--min-questions", opts.thresholds.min_questions,
                  "Minimum eligible questions for a response rate");
}

void write_output(const std::string& path, const std::string& bytes) {
  if (path.empty()) {
    std::cout << bytes;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write output file: " + path);
  out << bytes;
}

Lexicon load_lexicon(const CommonOpts& opts, ReportMeta& meta) {
  meta.inputs.emplace_back("lexicon", file_digest(opts.lexicon_path));
  return Lexicon::parse_file(opts.lexicon_path);
}

std::vector<UserRecord> load_records(const CommonOpts& opts, ReportMeta& meta) {
  meta.inputs.emplace_back("corpus", file_digest(opts.corpus_path));
  LoadStats stats;
  auto records = load_corpus_file(
      opts.corpus_path, opts.strict ? LoadMode::strict : LoadMode::lenient, &stats);
  if (stats.skipped > 0)
    std::cerr << "warning: skipped " << stats.skipped << " malformed corpus lines\n";
  if (records.empty()) throw ParseError("empty corpus");
  return records;
}

ProfileSet make_profiles(const CommonOpts& opts, const Lexicon& lexicon,
                         ReportMeta& meta) {
  const auto records = load_records(opts, meta);
  auto set = build_profiles(records, lexicon, opts.thresholds, opts.threads);
  if (set.exclusions.few_tweets + set.exclusions.insufficient_text > 0) {
    std::cerr << "warning: excluded " << set.exclusions.few_tweets
              << " users below the tweet threshold and "
              << set.exclusions.insufficient_text << " with insufficient text\n";
  }
  if (set.profiles.empty()) throw DataError("no users passed the activity thresholds");
  return set;
}

json profiles_json(const ProfileSet& set, const ReportMeta& meta) {
  json rows = json::array();
  for (const auto& p : set.profiles) {
    json scores = json::object();
    for (size_t c = 0; c < set.categories.size(); ++c)
      scores[set.categories[c].name] = p.scores.scores[c];
    json row{{"user_id", p.user_id},
             {"retweet_rate", p.retweet_rate},
             {"token_count", p.scores.token_count},
             {"scores", scores}};
    if (p.response_rate) row["response_rate"] = *p.response_rate;
    else row["response_rate"] = nullptr;
    rows.push_back(std::move(row));
  }
  return {{"meta", meta_json(meta)}, {"profiles", rows}};
}

int cmd_lexicon_validate(const CommonOpts& opts) {
  ReportMeta meta;
  meta.seed = opts.seed;
  const auto lexicon = load_lexicon(opts, meta);
  std::ostringstream out;
  write_meta_tsv(out, meta);
  out << "categories\t" << lexicon.categories().size() << "\n";
  out << "entries\t" << lexicon.entries().size() << "\n";
  for (const auto& cat : lexicon.categories())
    out << "category\t" << cat.id << "\t" << cat.name << "\n";
  write_output(opts.output_path, out.str());
  return 0;
}

int cmd_score(const CommonOpts& opts) {
  ReportMeta meta;
  meta.seed = opts.seed;
  const auto lexicon = load_lexicon(opts, meta);
  const auto set = make_profiles(opts, lexicon, meta);
  std::ostringstream out;
  if (opts.format == "json") {
    out << profiles_json(set, meta).dump(2) << '\n';
  } else {
    write_profiles_tsv(out, set, meta);
  }
  write_output(opts.output_path, out.str());
  return 0;
}

int cmd_rates(const CommonOpts& opts) {
  ReportMeta meta;
  meta.seed = opts.seed;
  const auto records = load_records(opts, meta);
  std::ostringstream out;
  size_t skipped_empty = 0;
  if (opts.format == "json") {
    json rows = json::array();
    for (const auto& rec : records) {
      if (rec.timeline.empty()) {
        ++skipped_empty;
        continue;
      }
      json row{{"user_id", rec.user_id},
               {"retweet_rate", compute_retweet_rate(rec)}};
      const auto rr = compute_response_rate(rec);
      row["response_rate"] = rr ? json(*rr) : json(nullptr);
      rows.push_back(std::move(row));
    }
    out << json{{"meta", meta_json(meta)}, {"rates", rows}}.dump(2) << '\n';
  } else {
    write_meta_tsv(out, meta);
    out << "user_id\tresponse_rate\tretweet_rate\n";
    for (const auto& rec : records) {
      if (rec.timeline.empty()) {
        ++skipped_empty;
        continue;
      }
      out << rec.user_id << '\t';
      if (const auto rr = compute_response_rate(rec)) out << format_fixed(*rr, 6);
      out << '\t' << format_fixed(compute_retweet_rate(rec), 6) << '\n';
    }
  }
  if (skipped_empty > 0)
    std::cerr << "warning: " << skipped_empty << " users have no authored tweets\n";
  write_output(opts.output_path, out.str());
  return 0;
}

int cmd_correlate(const CommonOpts& opts, const std::string& target_flag) {
  ReportMeta meta;
  meta.seed = opts.seed;
  const auto lexicon = load_lexicon(opts, meta);
  const auto set = make_profiles(opts, lexicon, meta);

  std::vector<stats::Target> targets;
  if (target_flag == "response") targets = {stats::Target::response};
  else if (target_flag == "retweet") targets = {stats::Target::retweet};
  else targets = {stats::Target::response, stats::Target::retweet};

  std::ostringstream out;
  if (opts.format == "json") {
    json by_target = json::object();
    for (auto target : targets) {
      json rows = json::array();
      for (const auto& res : stats::correlate_all(set, target)) {
        rows.push_back({{"category", res.category_name},
                        {"r", res.r},
                        {"p", res.p},
                        {"n", res.n},
                        {"tier", stats::tier_label(res.tier)},
                        {"zero_variance", res.zero_variance}});
      }
      by_target[stats::target_name(target)] = std::move(rows);
    }
    out << json{{"meta", meta_json(meta)}, {"correlations", by_target}}.dump(2) << '\n';
  } else {
    bool first = true;
    for (auto target : targets) {
      const auto results = stats::correlate_all(set, target);
      if (!first) out << '\n';
      first = false;
      stats::write_correlations_tsv(out, results, meta, target);
    }
  }
  write_output(opts.output_path, out.str());
  return 0;
}

struct TrainOpts {
  std::string model = "svr";
  std::string target = "retweet";
  std::string features = "all";
  models::Hyperparams hyper;
};

void add_hyper_flags(CLI::App* cmd, models::Hyperparams& hyper) {
  cmd->add_option("--lambda", hyper.lambda, "OLS conditioning ridge");
  cmd->add_option("--ridge-lambda", hyper.ridge_lambda, "Ridge penalty");
  cmd->add_option("--svr-c", hyper.svr_c, "SVR slack weight C");
  cmd->add_option("--svr-epsilon", hyper.svr_epsilon, "SVR insensitive band");
  cmd->add_option("--svr-epochs", hyper.svr_epochs, "SVR training epochs");
  cmd->add_option("--svr-lr", hyper.svr_lr, "SVR initial step size");
  cmd->add_option("--logistic-iterations", hyper.logistic_iterations,
                  "Logistic training iterations");
  cmd->add_option("--logistic-lr", hyper.logistic_lr, "Logistic step size");
  cmd->add_option("--logistic-l2", hyper.logistic_l2, "Logistic L2 penalty");
}

int cmd_train(const CommonOpts& opts, const TrainOpts& train) {
  if (opts.output_path.empty()) throw ParseError("train requires --output");
  ReportMeta meta;
  meta.seed = opts.seed;
  const auto lexicon = load_lexicon(opts, meta);
  const auto set = make_profiles(opts, lexicon, meta);
  const auto kind = models::kind_from_name(train.model);
  const auto target =
      train.target == "response" ? stats::Target::response : stats::Target::retweet;

  // Assemble raw features and target over the usable profiles.
  std::vector<double> y;
  std::vector<size_t> rows;
  for (size_t i = 0; i < set.profiles.size(); ++i) {
    const auto& p = set.profiles[i];
    if (target == stats::Target::response) {
      if (!p.response_rate) continue;
      y.push_back(*p.response_rate);
    } else {
      y.push_back(p.retweet_rate);
    }
    rows.push_back(i);
  }
  if (rows.size() < 3) throw DataError("too few usable profiles");

  Matrix raw(rows.size(), set.categories.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t c = 0; c < set.categories.size(); ++c)
      raw.at(i, c) = set.profiles[rows[i]].scores.scores[c];

  std::vector<size_t> cols(set.categories.size());
  for (size_t c = 0; c < cols.size(); ++c) cols[c] = c;
  if (train.features == "significant") {
    const auto results = stats::correlate_columns(raw, y, set.categories);
    cols.clear();
    for (const auto& res : results) {
      if (res.zero_variance || res.p >= 0.05) continue;
      for (size_t c = 0; c < set.categories.size(); ++c)
        if (set.categories[c].id == res.category_id) cols.push_back(c);
    }
    std::sort(cols.begin(), cols.end());
    if (cols.empty()) throw DataError("no significantly correlated categories");
  }

  std::vector<std::string> col_names;
  for (size_t c : cols) col_names.push_back(set.categories[c].name);
  const auto fm =
      models::standardize_fit(raw.select_columns(cols), std::move(col_names));

  models::Hyperparams hyper = train.hyper;
  hyper.seed = opts.seed;
  models::TrainedModel model;
  switch (kind) {
    case models::ModelKind::ols:
      model = models::fit_ols(fm, y, hyper.lambda, kind);
      break;
    case models::ModelKind::ridge:
      model = models::fit_ols(fm, y, hyper.ridge_lambda, kind);
      break;
    case models::ModelKind::svr:
      model = models::fit_svr(fm, y, hyper);
      break;
    case models::ModelKind::logistic: {
      const auto labels = eval::median_split(y);
      model = models::fit_logistic(fm, labels, hyper);
      break;
    }
    case models::ModelKind::gnb: {
      const auto labels = eval::median_split(y);
      model = models::fit_gnb(fm, labels);
      break;
    }
  }
  model.save(opts.output_path);
  std::cerr << "info: wrote model (" << models::kind_name(kind) << ", "
            << fm.columns.size() << " features) to " << opts.output_path << "\n";
  return 0;
}

struct CvCliOpts {
  std::string task = "regression";
  std::string model;
  std::string features = "both";
  std::string selection = "per-fold";
  std::string target = "both";
  size_t folds = 10;
  models::Hyperparams hyper;
};

int cmd_cv(const CommonOpts& opts, const CvCliOpts& cv) {
  ReportMeta meta;
  meta.seed = opts.seed;
  const auto lexicon = load_lexicon(opts, meta);
  const auto set = make_profiles(opts, lexicon, meta);

  eval::CvOptions base;
  base.task = cv.task == "classification" ? eval::Task::classification
                                          : eval::Task::regression;
  base.model_kind = models::kind_from_name(
      cv.model.empty() ? (base.task == eval::Task::regression ? "svr" : "logistic")
                       : cv.model);
  base.selection_scope = cv.selection == "global" ? eval::SelectionScope::global
                                                  : eval::SelectionScope::per_fold;
  base.folds = cv.folds;
  base.seed = opts.seed;
  base.hyper = cv.hyper;
  base.threads = opts.threads;

  std::vector<stats::Target> targets;
  if (cv.target == "response") targets = {stats::Target::response};
  else if (cv.target == "retweet") targets = {stats::Target::retweet};
  else targets = {stats::Target::response, stats::Target::retweet};
  std::vector<eval::FeatureMode> modes;
  if (cv.features == "all") modes = {eval::FeatureMode::all};
  else if (cv.features == "significant") modes = {eval::FeatureMode::significant};
  else modes = {eval::FeatureMode::all, eval::FeatureMode::significant};

  std::vector<eval::EvalReport> reports;
  for (auto mode : modes) {
    for (auto target : targets) {
      eval::CvOptions options = base;
      options.feature_mode = mode;
      options.target = target;
      reports.push_back(eval::cross_validate(set, options));
    }
  }
  for (const auto& r : reports) {
    if (r.task == eval::Task::classification && !r.stratified)
      std::cerr << "warning: fold stratification fell back to unstratified\n";
    for (bool fb : r.fallback_to_all)
      if (fb) {
        std::cerr << "warning: a fold had no significant categories; used all\n";
        break;
      }
  }

  std::ostringstream out;
  if (opts.format == "json") {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(r.to_json());
    out << json{{"meta", meta_json(meta)}, {"reports", arr}}.dump(2) << '\n';
  } else {
    eval::write_reports_tsv(out, reports, meta);
  }
  write_output(opts.output_path, out.str());
  return 0;
}

struct SynthCliOpts {
  std::string output = "corpus.jsonl";
  std::string manifest = "manifest.json";
  std::vector<std::string> plant;
  bool plant_tables = false;
  synth::SynthConfig config;
};

// Reference planting targets: the response and retweet correlations reported
// for the twelve demo categories.
std::vector<synth::PlantedCategory> table_plants() {
  return {
      {"anger", -0.173, 0.0},
      {"cognition", 0.152, 0.0},
      {"communication", 0.163, 0.144},
      {"anxiety", -0.083, 0.0},
      {"social_process", 0.104, 0.145},
      {"positive_feelings", 0.125, 0.193},
      {"perception", 0.0, 0.251},
      {"physical_states", 0.0, -0.172},
      {"tentative", 0.0, -0.053},
      {"positive_emotions", 0.0, 0.067},
      {"inclusive", 0.0, 0.21},
      {"other_refs", 0.0, 0.175},
  };
}

synth::PlantedCategory parse_plant(const std::string& arg) {
  const size_t c1 = arg.find(':');
  const size_t c2 = arg.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw ParseError("bad --plant value '" + arg + "', expected name:r_response:r_retweet");
  synth::PlantedCategory p;
  p.category_name = arg.substr(0, c1);
  try {
    p.r_response = std::stod(arg.substr(c1 + 1, c2 - c1 - 1));
    p.r_retweet = std::stod(arg.substr(c2 + 1));
  } catch (const std::exception&) {
    throw ParseError("bad --plant value '" + arg + "'");
  }
  return p;
}

int cmd_synth(const CommonOpts& opts, SynthCliOpts& sc) {
  ReportMeta meta;
  meta.seed = opts.seed;
  const auto lexicon = load_lexicon(opts, meta);

  sc.config.seed = opts.seed;
  if (sc.plant_tables) {
    sc.config.planted = table_plants();
  }
  for (const auto& arg : sc.plant) sc.config.planted.push_back(parse_plant(arg));

  std::ofstream corpus_out(sc.output, std::ios::binary);
  if (!corpus_out) throw ParseError("cannot write corpus file: " + sc.output);
  json manifest = synth::generate_corpus(sc.config, lexicon, corpus_out);
  corpus_out.close();

  manifest["meta"] = meta_json(meta);
  std::ofstream manifest_out(sc.manifest, std::ios::binary);
  if (!manifest_out) throw ParseError("cannot write manifest file: " + sc.manifest);
  manifest_out << manifest.dump(2) << '\n';
  std::cerr << "info: wrote " << sc.config.n_users << " users to " << sc.output << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Psycholinguistic word-use scoring and engagement prediction"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonOpts opts;
  TrainOpts train;
  CvCliOpts cv;
  SynthCliOpts sc;
  std::string correlate_target = "both";

  auto add_common = [&](CLI::App* cmd, bool corpus, bool lexicon, bool output = true) {
    if (corpus)
      cmd->add_option("--corpus", opts.corpus_path, "Corpus JSONL path")->required();
    if (lexicon)
      cmd->add_option("--lexicon", opts.lexicon_path, "Lexicon .dic path")->required();
    if (output)
      cmd->add_option("--output", opts.output_path, "Output path (default stdout)");
    cmd->add_option("--format", opts.format, "Output format")
        ->check(CLI::IsMember({"tsv", "json"}));
    cmd->add_option("--seed", opts.seed, "Random seed recorded in reports");
    cmd->add_option("--threads", opts.threads, "Worker threads");
    cmd->add_flag("--strict", opts.strict, "Abort on malformed corpus lines");
  };

  auto* validate_cmd = app.add_subcommand("lexicon-validate", "Check a lexicon file");
  add_common(validate_cmd, false, true);

  auto* score_cmd = app.add_subcommand("score", "Per-user category scores and rates");
  add_common(score_cmd, true, true);
  add_threshold_flags(score_cmd, opts);

  auto* rates_cmd = app.add_subcommand("rates", "Per-user engagement rates only");
  add_common(rates_cmd, true, false);

  auto* correlate_cmd =
      app.add_subcommand("correlate", "Category-rate correlation reports");
  add_common(correlate_cmd, true, true);
  add_threshold_flags(correlate_cmd, opts);
  correlate_cmd->add_option("--target", correlate_target, "response|retweet|both")
      ->check(CLI::IsMember({"response", "retweet", "both"}));

  auto* train_cmd = app.add_subcommand("train", "Fit one model and write it as JSON");
  add_common(train_cmd, true, true);
  add_threshold_flags(train_cmd, opts);
  train_cmd->add_option("--model", train.model, "ols|ridge|svr|logistic|gnb")
      ->check(CLI::IsMember({"ols", "ridge", "svr", "logistic", "gnb"}));
  train_cmd->add_option("--target", train.target, "response|retweet")
      ->check(CLI::IsMember({"response", "retweet"}));
  train_cmd->add_option("--features", train.features, "all|significant")
      ->check(CLI::IsMember({"all", "significant"}));
  add_hyper_flags(train_cmd, train.hyper);

  auto* cv_cmd = app.add_subcommand("cv", "K-fold cross-validated evaluation");
  add_common(cv_cmd, true, true);
  add_threshold_flags(cv_cmd, opts);
  cv_cmd->add_option("--task", cv.task, "regression|classification")
      ->check(CLI::IsMember({"regression", "classification"}));
  cv_cmd->add_option("--model", cv.model, "Model kind (default svr/logistic by task)");
  cv_cmd->add_option("--features", cv.features, "all|significant|both")
      ->check(CLI::IsMember({"all", "significant", "both"}));
  cv_cmd->add_option("--selection", cv.selection, "per-fold|global")
      ->check(CLI::IsMember({"per-fold", "global"}));
  cv_cmd->add_option("--target", cv.target, "response|retweet|both")
      ->check(CLI::IsMember({"response", "retweet", "both"}));
  cv_cmd->add_option("--folds", cv.folds, "Number of folds");
  add_hyper_flags(cv_cmd, cv.hyper);

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  add_common(synth_cmd, false, true, /*output=*/false);
  synth_cmd->add_option("--output", sc.output, "Corpus output path");
  synth_cmd->add_option("--manifest", sc.manifest, "Manifest output path");
  synth_cmd->add_option("--users", sc.config.n_users, "Number of users");
  synth_cmd->add_option("--tweets-per-user", sc.config.tweets_per_user, "Timeline length");
  synth_cmd->add_option("--questions-per-user", sc.config.questions_per_user,
                        "Inbound questions per user");
  synth_cmd->add_option("--base-usage", sc.config.base_usage,
                        "Baseline per-category emission probability");
  synth_cmd->add_option("--noise-sd", sc.config.noise_sd, "Per-user emission jitter");
  synth_cmd->add_option("--mean-response-rate", sc.config.mean_response_rate,
                        "Population mean response rate");
  synth_cmd->add_option("--response-sd", sc.config.response_rate_sd,
                        "Latent response-rate spread");
  synth_cmd->add_option("--mean-retweet-rate", sc.config.mean_retweet_rate,
                        "Population mean retweet rate");
  synth_cmd->add_option("--retweet-sd", sc.config.retweet_rate_sd,
                        "Latent retweet-rate spread");
  synth_cmd->add_option("--plant", sc.plant,
                        "Planted correlation name:r_response:r_retweet (repeatable)");
  synth_cmd->add_flag("--plant-tables", sc.plant_tables,
                      "Plant the reference correlation targets for the demo lexicon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (validate_cmd->parsed()) return cmd_lexicon_validate(opts);
    if (score_cmd->parsed()) return cmd_score(opts);
    if (rates_cmd->parsed()) return cmd_rates(opts);
    if (correlate_cmd->parsed()) return cmd_correlate(opts, correlate_target);
    if (train_cmd->parsed()) return cmd_train(opts, train);
    if (cv_cmd->parsed()) return cmd_cv(opts, cv);
    if (synth_cmd->parsed()) return cmd_synth(opts, sc);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
