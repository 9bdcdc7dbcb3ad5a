#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nosignal/attribution.hpp"
#include "nosignal/errors.hpp"
#include "nosignal/format.hpp"
#include "nosignal/learn.hpp"
#include "nosignal/manifest.hpp"
#include "nosignal/mlp.hpp"
#include "nosignal/synth.hpp"

#ifndef NOSIGNAL_VERSION
#define NOSIGNAL_VERSION "0.0.0"
#endif

namespace nosignal::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string absolute(const std::string& p) { return fs::absolute(fs::path(p)).lexically_normal().string(); }

std::string bit_string(Coalition s) {
  std::string out(static_cast<std::size_t>(s.players()), '0');
  for (int i = 0; i < s.players(); ++i) {
    if (s.contains(i)) out[static_cast<std::size_t>(i)] = '1';
  }
  return out;
}

// "1011" (x1 first, length n) or a 1-based list "1,3,4"; "" or "{}" is empty.
Coalition parse_coalition(const std::string& text, int n) {
  std::string t = text;
  t.erase(std::remove_if(t.begin(), t.end(), [](char c) { return c == '{' || c == '}' || c == ' '; }), t.end());
  if (t.empty()) return Coalition::empty(n);
  const bool bitlike = t.find_first_not_of("01") == std::string::npos;
  if (bitlike && t.size() == static_cast<std::size_t>(n)) {
    std::uint32_t bits = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] == '1') bits |= 1u << i;
    }
    return Coalition(bits, n);
  }
  Coalition s = Coalition::empty(n);
  std::stringstream ss(t);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    int v = 0;
    try {
      std::size_t used = 0;
      v = std::stoi(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ConfigError("bad coalition '" + text + "' (use a bit string of length n or indices like 1,3)");
    }
    if (v < 1 || v > n) throw ConfigError("coalition member " + std::to_string(v) + " outside [1, " + std::to_string(n) + "]");
    s = s.with(v - 1);
  }
  return s;
}

int variable_index(int one_based, int n) {
  if (one_based < 1 || one_based > n) {
    throw ConfigError("--var " + std::to_string(one_based) + " outside [1, " + std::to_string(n) + "]");
  }
  return one_based - 1;
}

json report_json(const AttributionReport& r) {
  json j = {{"phi", r.phi}, {"u", r.u}, {"v_empty", r.v_empty}, {"v_full", r.v_full}};
  if (r.method.kind == AttributionMethod::Kind::kExact) {
    j["method"] = "exact";
  } else {
    j["method"] = "sampled";
    j["permutations"] = r.method.permutations;
    j["seed"] = r.method.seed;
  }
  if (r.standard_error) j["stderr"] = *r.standard_error;
  return j;
}

struct Run {
  std::string command;
  std::string out_path;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  json inputs = json::object();
  json config = json::object();
};

void emit(const Run& run, const std::string& body, std::ostream& out, std::ostream& err) {
  json manifest = {{"command", run.command},
                   {"inputs", run.inputs},
                   {"output", run.out_path.empty() ? "-" : absolute(run.out_path)},
                   {"format", run.format},
                   {"version", NOSIGNAL_VERSION},
                   {"config", run.config}};
  manifest["seed"] = run.seed ? json(*run.seed) : json();
  if (run.out_path.empty()) {
    out << body;
    out.flush();
    err << manifest.dump() << '\n';
    return;
  }
  {
    std::ofstream f(run.out_path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + run.out_path + "'");
    f << body;
  }
  std::ofstream m(run.out_path + ".manifest.json", std::ios::binary);
  if (!m) throw ConfigError("cannot write '" + run.out_path + ".manifest.json'");
  m << manifest.dump(2) << '\n';
}

// Options shared by every command that reads a game file.
struct GameArgs {
  std::string game;
};

void add_game(CLI::App* cmd, GameArgs& g) {
  cmd->add_option("--game", g.game, "Game file (JSON: n, backend or expr, x, baseline, bounds, transform)")
      ->required()
      ->check(CLI::ExistingFile);
}

void add_out(CLI::App* cmd, std::string& out) {
  cmd->add_option("--out", out, "Write results here (default stdout); a .manifest.json is written next to it");
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shapley attributions, interaction analysis and baseline learning for value functions", "nosignal"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NOSIGNAL_VERSION);

  std::string out_path;

  // eval
  GameArgs eval_game;
  std::string coalition_text;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate v(S) for one coalition");
  add_game(eval_cmd, eval_game);
  eval_cmd->add_option("--coalition", coalition_text, "Coalition as a bit string (x1 first) or 1-based list, e.g. 101 or 1,3")
      ->required();
  add_out(eval_cmd, out_path);

  // shapley
  GameArgs shapley_game;
  bool exact = false;
  std::size_t perms = 0;
  std::uint64_t seed = 0;
  auto* shapley_cmd = app.add_subcommand("shapley", "Shapley values (exact, or by permutation sampling)");
  add_game(shapley_cmd, shapley_game);
  auto* exact_flag = shapley_cmd->add_flag("--exact", exact, "Enumerate all coalitions (default)");
  auto* perms_opt = shapley_cmd->add_option("--perms", perms, "Sample this many permutations instead")
                        ->check(CLI::PositiveNumber);
  exact_flag->excludes(perms_opt);
  shapley_cmd->add_option("--seed", seed, "Sampling seed");
  add_out(shapley_cmd, out_path);

  // interactions
  GameArgs inter_game;
  int max_order_arg = 0;
  auto* inter_cmd = app.add_subcommand("interactions", "Multi-variate interactions I(S) for 2 <= |S| <= M (CSV)");
  add_game(inter_cmd, inter_game);
  inter_cmd->add_option("--max-order", max_order_arg, "Largest coalition size M")->required()->check(CLI::PositiveNumber);
  add_out(inter_cmd, out_path);

  // orders
  GameArgs orders_game;
  int orders_var = 0;
  SamplingOptions orders_sampling;
  auto* orders_cmd = app.add_subcommand("orders", "Multi-order Shapley values of one variable, m = 0..n-1 (CSV)");
  add_game(orders_cmd, orders_game);
  orders_cmd->add_option("--var", orders_var, "Variable (1-based)")->required();
  orders_cmd->add_option("--cap", orders_sampling.cap, "Enumerate contexts when there are at most this many");
  orders_cmd->add_option("--contexts", orders_sampling.count, "Contexts sampled otherwise");
  orders_cmd->add_option("--seed", orders_sampling.seed, "Context sampling seed");
  add_out(orders_cmd, out_path);

  // spectrum
  GameArgs spectrum_game;
  std::optional<double> tau;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Order spectrum r_m of absolute interaction mass (CSV)");
  add_game(spectrum_cmd, spectrum_game);
  spectrum_cmd->add_option("--tau", tau, "Also count coalitions with |I(S)| >= tau per order");
  add_out(spectrum_cmd, out_path);

  // saliency
  GameArgs saliency_game;
  int saliency_var = 0;
  double top = 0.05;
  SamplingOptions saliency_sampling;
  auto* saliency_cmd = app.add_subcommand("saliency", "Context saliency p(j|i) over the top contexts of variable i (CSV)");
  add_game(saliency_cmd, saliency_game);
  saliency_cmd->add_option("--var", saliency_var, "Variable i (1-based)")->required();
  saliency_cmd->add_option("--top", top, "Fraction of contexts kept, ranked by |marginal benefit|")
      ->check(CLI::Range(0.0, 1.0));
  saliency_cmd->add_option("--cap", saliency_sampling.cap, "Enumerate contexts when there are at most this many");
  saliency_cmd->add_option("--contexts", saliency_sampling.count, "Contexts sampled otherwise");
  saliency_cmd->add_option("--seed", saliency_sampling.seed, "Context sampling seed");
  add_out(saliency_cmd, out_path);

  // learn
  std::string learn_config_path;
  std::optional<std::uint64_t> learn_seed;
  auto* learn_cmd = app.add_subcommand("learn", "Learn baseline values by projected gradient descent (JSON)");
  learn_cmd->add_option("--config", learn_config_path, "Learn config (JSON)")->required()->check(CLI::ExistingFile);
  learn_cmd->add_option("--seed", learn_seed, "Override the config seed");
  add_out(learn_cmd, out_path);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Synthetic functions with known baselines");
  synth_cmd->require_subcommand(1);
  int gen_count = 100;
  std::uint64_t gen_seed = 0;
  std::string grammar_path;
  auto* gen_cmd = synth_cmd->add_subcommand("gen", "Generate a corpus (JSON lines)");
  gen_cmd->add_option("--count", gen_count, "Number of functions")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_seed, "Generator seed");
  gen_cmd->add_option("--grammar", grammar_path, "Grammar overrides (JSON)")->check(CLI::ExistingFile);
  add_out(gen_cmd, out_path);

  std::string corpus_path;
  std::string verify_config_path;
  int jobs = 1;
  bool use_tsang = false;
  std::optional<std::uint64_t> verify_seed;
  std::optional<std::size_t> verify_batch;
  bool quiet = false;
  auto* verify_cmd = synth_cmd->add_subcommand("verify", "Learn baselines for every function, loss and init; score accuracy (CSV)");
  auto* corpus_opt = verify_cmd->add_option("--corpus", corpus_path, "Corpus (JSON lines)")->check(CLI::ExistingFile);
  auto* tsang_flag = verify_cmd->add_flag("--tsang", use_tsang, "Use the bundled benchmark suite as the corpus");
  corpus_opt->excludes(tsang_flag);
  verify_cmd->add_option("--config", verify_config_path, "Learn config (JSON; game and batch are ignored)")
      ->check(CLI::ExistingFile);
  verify_cmd->add_option("--jobs", jobs, "Parallel learning runs (results do not depend on it)")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--seed", verify_seed, "Override the config seed");
  verify_cmd->add_option("--batch", verify_batch, "Corner samples per function")->check(CLI::PositiveNumber);
  verify_cmd->add_flag("--quiet", quiet, "No progress on stderr");
  add_out(verify_cmd, out_path);

  auto* tsang_cmd = synth_cmd->add_subcommand("tsang", "Write the bundled benchmark suite (JSON lines)");
  add_out(tsang_cmd, out_path);

  // mlp
  auto* mlp_cmd = app.add_subcommand("mlp", "Train the feed-forward backend");
  mlp_cmd->require_subcommand(1);
  std::string data_path;
  std::string arch_text = "16";
  TrainOptions train_opts;
  auto* train_cmd = mlp_cmd->add_subcommand("train", "Train on a CSV dataset; writes weights JSON");
  train_cmd->add_option("--data", data_path, "Dataset CSV (header row; last column is the label)")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--arch", arch_text, "Hidden widths, e.g. 16,8 or 16,8:sigmoid");
  train_cmd->add_option("--epochs", train_opts.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lr", train_opts.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train_opts.seed, "Initialisation and shuffling seed");
  train_cmd->add_option("--batch", train_opts.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  add_out(train_cmd, out_path);

  std::size_t per_class = 100;
  int blob_dim = 4;
  int blob_classes = 2;
  double spread = 0.08;
  std::uint64_t blob_seed = 0;
  auto* blobs_cmd = mlp_cmd->add_subcommand("blobs", "Write a toy Gaussian-blob dataset (CSV)");
  blobs_cmd->add_option("--per-class", per_class, "Rows per class")->check(CLI::PositiveNumber);
  blobs_cmd->add_option("--dim", blob_dim, "Features")->check(CLI::PositiveNumber);
  blobs_cmd->add_option("--classes", blob_classes, "Classes (>= 2)");
  blobs_cmd->add_option("--spread", spread, "Standard deviation around each centre")->check(CLI::NonNegativeNumber);
  blobs_cmd->add_option("--seed", blob_seed, "Seed");
  add_out(blobs_cmd, out_path);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << NOSIGNAL_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (const auto* sub : app.get_subcommands()) {
      failed = sub;
      for (const auto* inner : sub->get_subcommands()) failed = inner;
    }
    err << failed->help();
    return kExitConfig;
  }

  Run run;
  run.out_path = out_path;
  try {
    std::ostringstream body;
    if (*eval_cmd) {
      run.command = "eval";
      run.inputs["game"] = absolute(eval_game.game);
      const GameSpec game = load_game(eval_game.game);
      const Coalition s = parse_coalition(coalition_text, game.players());
      run.config = {{"game", game_to_json(game)}, {"coalition", bit_string(s)}};
      const double v = evaluate(game, s);
      body << json{{"coalition", s.to_string()}, {"bits", bit_string(s)}, {"value", v}}.dump() << '\n';
    } else if (*shapley_cmd) {
      run.command = "shapley";
      run.inputs["game"] = absolute(shapley_game.game);
      const GameSpec game = load_game(shapley_game.game);
      run.config = {{"game", game_to_json(game)}};
      AttributionReport report;
      if (perms > 0) {
        run.seed = seed;
        run.config["permutations"] = perms;
        report = shapley_sampled(game, perms, seed);
      } else {
        run.config["exact"] = true;
        report = shapley_exact(game);
      }
      body << report_json(report).dump() << '\n';
    } else if (*inter_cmd) {
      run.command = "interactions";
      run.format = "csv";
      run.inputs["game"] = absolute(inter_game.game);
      const GameSpec game = load_game(inter_game.game);
      run.config = {{"game", game_to_json(game)}, {"max_order", max_order_arg}};
      const InteractionTable table = interactions(game, max_order_arg);
      body << "coalition_bits,order,value\n";
      for (const auto& [s, v] : table.entries) body << bit_string(s) << ',' << s.size() << ',' << format_real(v) << '\n';
    } else if (*orders_cmd) {
      run.command = "orders";
      run.format = "csv";
      run.seed = orders_sampling.seed;
      run.inputs["game"] = absolute(orders_game.game);
      const GameSpec game = load_game(orders_game.game);
      const int i = variable_index(orders_var, game.players());
      run.config = {{"game", game_to_json(game)}, {"var", orders_var}, {"cap", orders_sampling.cap},
                    {"contexts", orders_sampling.count}};
      body << "order,value,exact,contexts\n";
      for (int m = 0; m < game.players(); ++m) {
        const OrderEstimate e = shapley_order(game, i, m, orders_sampling);
        body << m << ',' << format_real(e.value) << ',' << (e.exact ? "true" : "false") << ',' << e.contexts << '\n';
      }
    } else if (*spectrum_cmd) {
      run.command = "spectrum";
      run.format = "csv";
      run.inputs["game"] = absolute(spectrum_game.game);
      const GameSpec game = load_game(spectrum_game.game);
      run.config = {{"game", game_to_json(game)}};
      if (tau) run.config["tau"] = *tau;
      const OrderSpectrum sp = order_spectrum(game, tau);
      body << (sp.salient_count ? "order,ratio,salient\n" : "order,ratio\n");
      for (int m = 1; m <= game.players(); ++m) {
        body << m << ',' << format_real(sp.r(m));
        if (sp.salient_count) body << ',' << (*sp.salient_count)[static_cast<std::size_t>(m - 1)];
        body << '\n';
      }
      if (sp.degenerate) err << "warning: all interactions are zero; ratios reported as 0\n";
    } else if (*saliency_cmd) {
      run.command = "saliency";
      run.format = "csv";
      run.seed = saliency_sampling.seed;
      run.inputs["game"] = absolute(saliency_game.game);
      const GameSpec game = load_game(saliency_game.game);
      const int i = variable_index(saliency_var, game.players());
      run.config = {{"game", game_to_json(game)}, {"var", saliency_var}, {"top", top}, {"cap", saliency_sampling.cap},
                    {"contexts", saliency_sampling.count}};
      const SaliencyMap map = context_saliency(game, i, top, saliency_sampling);
      body << "variable,p\n";
      for (std::size_t j = 0; j < map.p.size(); ++j) body << j + 1 << ',' << format_real(map.p[j]) << '\n';
    } else if (*learn_cmd) {
      run.command = "learn";
      run.inputs["config"] = absolute(learn_config_path);
      LearnJob job = load_learn_job(learn_config_path);
      if (learn_seed) job.config.seed = *learn_seed;
      run.seed = job.config.seed;
      run.config = job.echo;
      run.config["seed"] = job.config.seed;
      const LearnState state = learn(job.config, job.game);
      json result = {{"b", state.b.values()},
                     {"loss_trace", state.loss_trace},
                     {"grad_norm_trace", state.grad_norm_trace},
                     {"converged", state.converged},
                     {"steps", state.steps}};
      if (!job.truth.empty()) result["accuracy"] = accuracy(state.b.values(), job.truth, job.game.bounds);
      if (state.error) result["error"] = *state.error;
      body << result.dump() << '\n';
      if (state.error) {
        emit(run, body.str(), out, err);
        err << "error: " << *state.error << '\n';
        return kExitEvaluation;
      }
    } else if (*gen_cmd) {
      run.command = "synth gen";
      run.format = "jsonl";
      run.seed = gen_seed;
      GrammarConfig grammar;
      if (!grammar_path.empty()) {
        run.inputs["grammar"] = absolute(grammar_path);
        const json g = read_json_file(grammar_path);
        try {
          grammar.min_n = g.value("min_n", grammar.min_n);
          grammar.max_n = g.value("max_n", grammar.max_n);
          grammar.min_terms = g.value("min_terms", grammar.min_terms);
          grammar.max_terms = g.value("max_terms", grammar.max_terms);
          grammar.max_group = g.value("max_group", grammar.max_group);
          grammar.monomial_weight = g.value("monomial_weight", grammar.monomial_weight);
          grammar.power_weight = g.value("power_weight", grammar.power_weight);
          grammar.sigmoid_weight = g.value("sigmoid_weight", grammar.sigmoid_weight);
          grammar.min_exponent = g.value("min_exponent", grammar.min_exponent);
          grammar.max_exponent = g.value("max_exponent", grammar.max_exponent);
          grammar.min_gain = g.value("min_gain", grammar.min_gain);
          grammar.max_gain = g.value("max_gain", grammar.max_gain);
          grammar.overlap_probability = g.value("overlap_probability", grammar.overlap_probability);
        } catch (const json::exception& e) {
          throw ConfigError(std::string("bad grammar file: ") + e.what());
        }
      }
      run.config = {{"count", gen_count},
                    {"grammar",
                     {{"min_n", grammar.min_n}, {"max_n", grammar.max_n}, {"min_terms", grammar.min_terms},
                      {"max_terms", grammar.max_terms}, {"max_group", grammar.max_group},
                      {"monomial_weight", grammar.monomial_weight}, {"power_weight", grammar.power_weight},
                      {"sigmoid_weight", grammar.sigmoid_weight}, {"min_exponent", grammar.min_exponent},
                      {"max_exponent", grammar.max_exponent}, {"min_gain", grammar.min_gain},
                      {"max_gain", grammar.max_gain}, {"overlap_probability", grammar.overlap_probability}}}};
      body << to_jsonl(generate_corpus(gen_count, gen_seed, grammar));
    } else if (*verify_cmd) {
      run.command = "synth verify";
      run.format = "csv";
      std::vector<SynthFunction> corpus;
      if (use_tsang) {
        corpus = tsang_suite();
        run.inputs["corpus"] = "tsang";
      } else if (!corpus_path.empty()) {
        run.inputs["corpus"] = absolute(corpus_path);
        corpus = load_corpus(corpus_path);
      } else {
        throw ConfigError("synth verify needs --corpus F or --tsang");
      }
      VerifyOptions options;
      if (!verify_config_path.empty()) {
        run.inputs["config"] = absolute(verify_config_path);
        const json c = read_json_file(verify_config_path);
        options.learn = learn_config_from_json(c);
        try {
          options.batch_size = c.value("batch_size", options.batch_size);
          if (c.contains("inits")) options.inits = c["inits"].get<std::vector<double>>();
          if (c.contains("losses")) {
            options.losses.clear();
            for (const auto& l : c["losses"]) options.losses.push_back(parse_loss(l.get<std::string>()));
          }
        } catch (const json::exception& e) {
          throw ConfigError(std::string("bad verify config: ") + e.what());
        }
      }
      if (verify_seed) options.learn.seed = *verify_seed;
      if (verify_batch) options.batch_size = *verify_batch;
      options.jobs = jobs;
      run.seed = options.learn.seed;
      json losses = json::array();
      for (LossKind l : options.losses) losses.push_back(loss_name(l));
      // jobs is left out on purpose: it does not affect the output.
      run.config = learn_config_to_json(options.learn);
      run.config.erase("init");
      run.config["batch_size"] = options.batch_size;
      run.config["inits"] = options.inits;
      run.config["losses"] = losses;
      std::function<void(std::size_t, std::size_t)> progress;
      if (!quiet) {
        progress = [&err](std::size_t done, std::size_t total) {
          if (done == total || done % 25 == 0) err << "verify: " << done << '/' << total << " runs\n";
        };
      }
      body << verify_csv(verify(corpus, options, progress));
    } else if (*tsang_cmd) {
      run.command = "synth tsang";
      run.format = "jsonl";
      body << to_jsonl(tsang_suite());
    } else if (*train_cmd) {
      run.command = "mlp train";
      run.seed = train_opts.seed;
      run.inputs["data"] = absolute(data_path);
      const Dataset data = load_dataset_csv(data_path);
      const Architecture arch = parse_architecture(arch_text);
      run.config = {{"arch", arch_text}, {"epochs", train_opts.epochs}, {"lr", train_opts.learning_rate},
                    {"batch", train_opts.batch_size}};
      const TrainResult result = train(data, arch, train_opts);
      run.config["final_loss"] = result.loss_trace.empty() ? json() : json(result.loss_trace.back());
      run.config["training_accuracy"] = training_accuracy(result.model, data);
      body << result.model.to_json().dump() << '\n';
    } else if (*blobs_cmd) {
      run.command = "mlp blobs";
      run.format = "csv";
      run.seed = blob_seed;
      run.config = {{"per_class", per_class}, {"dim", blob_dim}, {"classes", blob_classes}, {"spread", spread}};
      const Dataset data = make_blobs(per_class, blob_dim, blob_classes, spread, blob_seed);
      std::ostringstream csv;
      for (int c = 0; c < data.features(); ++c) csv << 'f' << c + 1 << ',';
      csv << "label\n";
      for (std::size_t r = 0; r < data.size(); ++r) csv << join_reals(data.rows[r]) << ',' << data.labels[r] << '\n';
      body << csv.str();
    }
    emit(run, body.str(), out, err);
    return kExitOk;
  } catch (const EvaluationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitEvaluation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitEvaluation;
  } catch (const TrainingError& e) {
    err << "error: " << e.what() << '\n';
    return kExitEvaluation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace nosignal::cli
