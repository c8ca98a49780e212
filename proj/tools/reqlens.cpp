// reqlens command line: train, evaluate, explain, aggregate, ablate, serve.

#include <csignal>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reqlens/http.hpp"
#include "reqlens/reqlens.hpp"

namespace fs = std::filesystem;
using namespace reqlens;

namespace {

struct Options {
  std::string data;
  std::string model;
  std::string out;
  std::uint32_t seed = 0;

  std::string profile = "A";
  std::string extra_remove;
  std::string stopwords;
  std::string modal_words;
  std::string common_words;

  int trees = 100;
  int max_depth = -1;
  int min_samples_split = 2;
  int features_per_split = 0;
  double test_fraction = 0.2;
  unsigned threads = 1;

  std::size_t samples = 1000;
  double sigma = 5.0;
  double ridge_lambda = 1.0;
  std::size_t topk = 10;
  std::uint32_t lime_seed = 0;

  std::optional<std::size_t> id;
  std::string text;
  std::size_t top_words = 30;

  std::size_t runs = 30;
  double alpha = 0.05;
  bool pooled = false;

  int port = 8080;
  std::string host = "127.0.0.1";
  std::string static_dir;
};

void add_data_flags(CLI::App* cmd, Options& o, bool required) {
  auto* f = cmd->add_option("--data", o.data, "requirements CSV (text,label or project,text,label)");
  if (required) f->required();
}

void add_preprocess_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--removal-profile", o.profile, "A, A-M or A-M-C")
      ->check(CLI::IsMember({"A", "A-M", "A-M-C"}));
  cmd->add_option("--extra-remove", o.extra_remove, "word list added to the removal profile");
  cmd->add_option("--stopwords", o.stopwords, "stopword list replacing the built-in one");
  cmd->add_option("--modal-words", o.modal_words, "modal word list for A-M / A-M-C");
  cmd->add_option("--common-words", o.common_words, "common word list for A-M-C");
}

void add_forest_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "seed for the split and the forest");
  cmd->add_option("--trees", o.trees, "number of trees")->check(CLI::PositiveNumber);
  cmd->add_option("--max-depth", o.max_depth, "tree depth limit (-1 = none)");
  cmd->add_option("--min-samples-split", o.min_samples_split)->check(CLI::Range(2, 1 << 30));
  cmd->add_option("--features-per-split", o.features_per_split, "0 = floor(sqrt(V))")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--test-fraction", o.test_fraction)->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--threads", o.threads, "tree building threads")->check(CLI::PositiveNumber);
}

void add_lime_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--samples", o.samples, "perturbed samples per explanation")
      ->check(CLI::Range(std::size_t{10}, std::size_t{1000000}));
  cmd->add_option("--sigma", o.sigma, "kernel width")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", o.ridge_lambda, "ridge penalty")->check(CLI::NonNegativeNumber);
  cmd->add_option("--topk", o.topk, "words per explanation")->check(CLI::PositiveNumber);
  cmd->add_option("--lime-seed", o.lime_seed, "perturbation seed");
}

WordSet word_list_or(const std::string& path, const WordSet& fallback) {
  return path.empty() ? fallback : load_word_list(path);
}

RemovalProfile profile_of(const Options& o) {
  const auto modal = word_list_or(o.modal_words, default_modal_words());
  const auto common = word_list_or(o.common_words, default_common_words());
  RemovalProfile p;
  switch (parse_profile_name(o.profile)) {
    case ProfileName::AM: p = RemovalProfile::without_modals(modal); break;
    case ProfileName::AMC: p = RemovalProfile::without_modals_and_common(modal, common); break;
    default: break;
  }
  if (!o.extra_remove.empty()) p = p.with_added(stem_all(load_word_list(o.extra_remove)));
  return p;
}

ForestParams forest_of(const Options& o) {
  ForestParams f;
  f.n_trees = o.trees;
  if (o.max_depth >= 0) f.max_depth = o.max_depth;
  f.min_samples_split = o.min_samples_split;
  if (o.features_per_split > 0) f.features_per_split = o.features_per_split;
  f.seed = o.seed;
  f.validate();
  return f;
}

ModelSettings settings_of(const Options& o) {
  PreprocessConfig pc{word_list_or(o.stopwords, default_stopwords()), profile_of(o)};
  auto s = ModelSettings::seeded(o.seed, std::move(pc), forest_of(o));
  s.test_fraction = o.test_fraction;
  return s;
}

LimeConfig lime_of(const Options& o) {
  LimeConfig c;
  c.n_samples = o.samples;
  c.sigma = o.sigma;
  c.ridge_lambda = o.ridge_lambda;
  c.top_k = o.topk;
  c.seed = o.lime_seed;
  c.validate();
  return c;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error(errc::io_error, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw error(errc::io_error, "write failed for '" + path.string() + "'");
}

void emit(const nlohmann::json& j, const std::string& out_path = {}) {
  const auto text = dump_json(j, 2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_file(out_path, text);
  }
}

// The data file a model refers to, unless overridden.
Dataset dataset_for(const Options& o, const TrainedModel& m) {
  const auto path = o.data.empty() ? m.dataset.path : o.data;
  if (path.empty()) throw error(errc::invalid_config, "model has no dataset path; pass --data");
  return load_dataset(path);
}

int cmd_train(const Options& o) {
  const auto data = load_dataset(o.data);
  const auto outcome = train_and_evaluate(data, settings_of(o), DatasetInfo::of(data, o.data), o.threads);
  if (!o.out.empty()) write_file(o.out, dump_model(outcome.model));
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
  emit({{"metrics", outcome.metrics},
        {"profile", std::string(to_string(outcome.model.preprocessor.config().profile.name()))},
        {"seed", o.seed},
        {"train_size", outcome.split.train.size()},
        {"test_size", outcome.split.test.size()},
        {"vocabulary_size", outcome.model.vocabulary.size()}});
  return 0;
}

int cmd_evaluate(const Options& o) {
  const auto model = load_model(o.model);
  const auto data = dataset_for(o, model);
  const auto sp = model.split_of(data);
  emit({{"metrics", evaluate(model.forest, model.labeled_vectors(sp.test))},
        {"test_size", sp.test.size()}});
  return 0;
}

int cmd_explain(const Options& o) {
  const auto model = load_model(o.model);
  const auto lime = lime_of(o);
  Requirement req;
  if (o.id) {
    const auto data = dataset_for(o, model);
    if (*o.id >= data.size()) {
      throw error(errc::not_found, "no requirement with id " + std::to_string(*o.id));
    }
    req = data[*o.id];
  } else {
    req.text = o.text;
  }
  emit(explain(model, req, lime), o.out);
  return 0;
}

int cmd_aggregate(const Options& o) {
  const auto model = load_model(o.model);
  const auto data = dataset_for(o, model);
  const auto sp = model.split_of(data);
  const auto lime = lime_of(o);
  const auto batch = explain_all(model, sp.test, lime);
  const auto report = AnalysisReport::build(batch.explanations, data);

  auto j = report.to_json(o.top_words);
  j["lime"] = lime;
  j["skipped"] = batch.skipped;
  const fs::path dir = o.out;
  fs::create_directories(dir);
  write_file(dir / "report.json", dump_json(j, 2) + "\n");
  write_file(dir / "explanations.json", dump_json(nlohmann::json(batch.explanations), 2) + "\n");
  std::ostringstream words, sup, dis;
  report.write_words_csv(words);
  AnalysisReport::write_top_csv(sup, report.stats.supportive_counts, o.top_words);
  AnalysisReport::write_top_csv(dis, report.stats.distractive_counts, o.top_words);
  write_file(dir / "words.csv", words.str());
  write_file(dir / "top_supportive.csv", sup.str());
  write_file(dir / "top_distractive.csv", dis.str());

  emit({{"explained", batch.explanations.size()},
        {"skipped", batch.skipped.size()},
        {"supportive_total", report.stats.n_supportive},
        {"distractive_total", report.stats.n_distractive},
        {"set_sizes",
         {{"A", report.sets.distractive_only.size()},
          {"B", report.sets.supportive_only.size()},
          {"C", report.sets.common.size()}}},
        {"out", dir.string()}});
  return 0;
}

int cmd_ablate(const Options& o) {
  const auto data = load_dataset(o.data);
  ExperimentSettings es;
  es.stopwords = word_list_or(o.stopwords, default_stopwords());
  es.forest = forest_of(o);
  es.test_fraction = o.test_fraction;
  es.threads = o.threads;
  const auto modal = word_list_or(o.modal_words, default_modal_words());
  const auto common = word_list_or(o.common_words, default_common_words());
  const std::vector<RemovalProfile> profiles{RemovalProfile::all_words(),
                                             RemovalProfile::without_modals(modal),
                                             RemovalProfile::without_modals_and_common(modal, common)};
  const auto report = ablation_matrix(data, o.runs, o.seed, o.alpha, es,
                                      o.pooled ? stats::TTestVariant::Pooled : stats::TTestVariant::Welch,
                                      profiles);
  if (!o.out.empty()) write_file(o.out, dump_json(nlohmann::json(report), 2) + "\n");
  std::cout << report.matrix.format_table();
  for (const auto& b : report.batches) {
    const auto s = summarize(b.trials);
    std::printf("%-6s  acc %.4f  f1 %.4f  prec %.4f  rec %.4f\n", b.profile.c_str(),
                s.at(Metric::Accuracy).mean, s.at(Metric::F1).mean, s.at(Metric::Precision).mean,
                s.at(Metric::Recall).mean);
  }
  return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const Options& o) {
  ModelSettings settings;
  std::string path = o.data;
  if (!o.model.empty()) {
    const auto model = load_model(o.model);
    if (path.empty()) path = model.dataset.path;
    settings.preprocess = model.preprocessor.config();
    settings.forest = model.forest.params;
    settings.split_seed = model.split_seed;
    settings.test_fraction = model.test_fraction;
  } else {
    if (path.empty()) throw error(errc::invalid_config, "serve needs --data or --model");
    settings = settings_of(o);
  }
  Session session(load_dataset(path), settings, path, o.threads);
  ServiceOptions so;
  so.lime = lime_of(o);
  Service service(session, so);

  httplib::Server server;
  mount(server, service, o.static_dir);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cerr << "serving on http://" << o.host << ":" << o.port << "  config "
            << session.snapshot()->hash_hex() << "\n";
  if (!server.listen(o.host, o.port)) {
    throw error(errc::io_error, "cannot listen on " + o.host + ":" + std::to_string(o.port));
  }
  return 0;
}

void error_line(std::string_view code, std::string_view message,
                std::optional<std::size_t> line = std::nullopt) {
  nlohmann::json j = {{"error", code}, {"message", message}};
  if (line) j["line"] = *line;
  std::cerr << dump_json(j) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Explainable functional / non-functional requirement classifier"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a forest and report test metrics");
  add_data_flags(train, o, true);
  add_preprocess_flags(train, o);
  add_forest_flags(train, o);
  train->add_option("--out", o.out, "model file to write");

  auto* evaluate = app.add_subcommand("evaluate", "re-score a saved model on its test split");
  evaluate->add_option("--model", o.model)->required();
  add_data_flags(evaluate, o, false);

  auto* explain = app.add_subcommand("explain", "explain one prediction");
  explain->add_option("--model", o.model)->required();
  add_data_flags(explain, o, false);
  auto* id = explain->add_option("--id", o.id, "row of the dataset (0-based)");
  auto* text = explain->add_option("--text", o.text, "free requirement text");
  id->excludes(text);
  explain->add_option("--out", o.out, "write JSON here instead of stdout");
  add_lime_flags(explain, o);

  auto* aggregate = app.add_subcommand("aggregate", "explain the test split and aggregate words");
  aggregate->add_option("--model", o.model)->required();
  add_data_flags(aggregate, o, false);
  aggregate->add_option("--out", o.out, "report directory")->required();
  aggregate->add_option("--top", o.top_words, "words in the top lists")->check(CLI::PositiveNumber);
  add_lime_flags(aggregate, o);

  auto* ablate = app.add_subcommand("ablate", "A / A-M / A-M-C removal ablation with t-tests");
  add_data_flags(ablate, o, true);
  add_forest_flags(ablate, o);
  ablate->add_option("--stopwords", o.stopwords);
  ablate->add_option("--modal-words", o.modal_words);
  ablate->add_option("--common-words", o.common_words);
  ablate->add_option("--runs", o.runs, "trials per profile")->check(CLI::Range(2, 100000));
  ablate->add_option("--alpha", o.alpha, "significance level")->check(CLI::Range(0.0, 1.0));
  ablate->add_flag("--pooled", o.pooled, "pooled-variance t-test instead of Welch");
  ablate->add_option("--out", o.out, "JSON report");

  auto* serve = app.add_subcommand("serve", "HTTP service for the feedback loop");
  add_data_flags(serve, o, false);
  serve->add_option("--model", o.model, "take settings from a saved model");
  add_preprocess_flags(serve, o);
  add_forest_flags(serve, o);
  add_lime_flags(serve, o);
  serve->add_option("--port", o.port)->check(CLI::Range(1, 65535));
  serve->add_option("--host", o.host);
  serve->add_option("--static", o.static_dir, "explorer assets served under /");

  try {
    app.parse(argc, argv);
    if (explain->parsed() && !o.id && o.text.empty()) {
      throw CLI::ValidationError("explain", "one of --id or --text is required");
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_line("usage", e.what());
    return 2;
  }

  try {
    if (train->parsed()) return cmd_train(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (explain->parsed()) return cmd_explain(o);
    if (aggregate->parsed()) return cmd_aggregate(o);
    if (ablate->parsed()) return cmd_ablate(o);
    if (serve->parsed()) return cmd_serve(o);
  } catch (const error& e) {
    error_line(to_string(e.code()), e.message(), e.line());
    return 1;
  } catch (const std::exception& e) {
    error_line("io_error", e.what());
    return 1;
  }
  return 2;
}
