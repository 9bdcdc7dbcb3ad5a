#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nosignal/game.hpp"
#include "nosignal/learn.hpp"

namespace nosignal {

/// One designed interaction pattern: the variables (0-based) and the value
/// each must take for the pattern to fire.
struct Pattern {
  std::vector<int> vars;
  std::vector<double> activation;
  std::size_t term = 0;  // index into SynthFunction::terms
};

struct SynthFunction {
  std::string name;
  int n = 0;
  std::string expr;
  std::vector<Interval> domain;
  bool binary = true;  // domain is [0,1] for every variable
  std::vector<std::optional<double>> truth;
  std::vector<Pattern> patterns;   // generated functions only
  std::vector<std::string> terms;  // per-term sources, signs included

  std::size_t annotated() const;
};

struct GrammarConfig {
  int min_n = 7;
  int max_n = 12;
  int min_terms = 2;
  int max_terms = 4;
  int max_group = 6;
  // Relative template weights.
  double monomial_weight = 1.0;
  double power_weight = 1.0;
  double sigmoid_weight = 1.0;
  double min_exponent = 1.1;
  double max_exponent = 2.6;
  int min_gain = 3;
  int max_gain = 8;
  double overlap_probability = 0.2;
};

/// Throws ConfigError if the ranges cannot produce a function.
void validate(const GrammarConfig& g);

/// `count` functions, each a signed sum of monomial, power and sigmoid terms
/// over contiguous variable groups. Deterministic in (count, seed, grammar).
std::vector<SynthFunction> generate_corpus(int count, std::uint64_t seed, const GrammarConfig& grammar = {});

/// The ten bundled benchmark functions on [0.001, 0.999] with their
/// annotated truths (61 entries in total).
std::vector<SynthFunction> tsang_suite();

/// Truth for an expression written in the generator's template grammar (a
/// signed sum of variable products, c*lead*(sum of +-x)^p terms and
/// sigmoid(sum of +-k*product + c) terms). Each pattern is deactivated by the
/// complement of its activation literals; variables whose patterns disagree,
/// or that join no pattern of two or more variables, get no truth. Throws
/// ArgumentError if a term fits no template.
std::vector<std::optional<double>> template_truth(const std::string& expr, int n);

/// For each pattern and each of its variables: the change of that pattern's
/// term when the variable moves from its activation value to its truth.
/// Returns the smallest change seen (infinity if there are no patterns).
double min_deactivation_change(const SynthFunction& f);

nlohmann::json to_json(const SynthFunction& f);
SynthFunction synth_from_json(const nlohmann::json& j);
std::string to_jsonl(const std::vector<SynthFunction>& corpus);
std::vector<SynthFunction> load_corpus(const std::string& path);
std::vector<SynthFunction> parse_corpus(const std::string& text);

/// `count` rows drawn uniformly from the corners {lo, hi}^n of the domain.
std::vector<std::vector<double>> corner_batch(const SynthFunction& f, std::size_t count, std::uint64_t seed);

GameTemplate make_template(const SynthFunction& f, std::vector<std::vector<double>> batch);

struct VerifyOptions {
  LearnConfig learn;  // loss and init are overridden per run
  std::size_t batch_size = 32;
  int jobs = 1;
  std::vector<LossKind> losses{LossKind::kShapley, LossKind::kMarginal};
  std::vector<double> inits{0.0, 0.5, 1.0};  // position within each domain
};

struct VerifyRow {
  std::string function;
  LossKind loss = LossKind::kShapley;
  double init = 0.0;
  AccuracyCount score;
  double final_loss = 0.0;
  int steps = 0;
  std::vector<double> b;
};

struct VerifySummary {
  std::vector<VerifyRow> rows;  // function-major, then loss, then init
  struct Pooled {
    LossKind loss;
    double init;
    AccuracyCount score;
  };
  std::vector<Pooled> pooled;  // loss-major, then init
  double pooled_accuracy(LossKind loss, double init) const;
};

/// Runs learn() for every function x loss x init and scores the result.
/// Each run's seeds derive from (learn.seed, function index, init index), so
/// the result does not depend on `jobs`. Throws ArgumentError on an empty
/// corpus. `progress` (optional) is called after each finished run.
VerifySummary verify(const std::vector<SynthFunction>& corpus, const VerifyOptions& options,
                     const std::function<void(std::size_t, std::size_t)>& progress = {});

/// CSV `function,loss,init,accuracy,final_loss,steps` with trailing
/// `pooled` rows.
std::string verify_csv(const VerifySummary& summary);

}  // namespace nosignal
