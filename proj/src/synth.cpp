#include "nosignal/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "nosignal/errors.hpp"
#include "nosignal/expr.hpp"
#include "nosignal/format.hpp"
#include "nosignal/random.hpp"

namespace nosignal {

std::size_t SynthFunction::annotated() const {
  return static_cast<std::size_t>(std::count_if(truth.begin(), truth.end(), [](const auto& t) { return t.has_value(); }));
}

void validate(const GrammarConfig& g) {
  if (g.min_n < 2 || g.max_n < g.min_n || g.max_n > kMaxPlayers) throw ConfigError("bad n range");
  if (g.min_terms < 1 || g.max_terms < g.min_terms) throw ConfigError("bad term-count range");
  if (g.max_group < 2) throw ConfigError("max_group must be >= 2");
  if (2 * g.min_terms > g.max_n || g.max_terms * g.max_group < g.min_n) {
    throw ConfigError("term and group ranges cannot cover the n range");
  }
  if (g.monomial_weight < 0 || g.power_weight < 0 || g.sigmoid_weight < 0 ||
      g.monomial_weight + g.power_weight + g.sigmoid_weight <= 0) {
    throw ConfigError("template weights must be non-negative with a positive sum");
  }
  if (!(g.min_exponent > 0) || g.max_exponent < g.min_exponent) throw ConfigError("bad exponent range");
  if (g.min_gain < 1 || g.max_gain < g.min_gain) throw ConfigError("bad sigmoid gain range");
  if (g.overlap_probability < 0 || g.overlap_probability > 1) throw ConfigError("overlap_probability outside [0,1]");
}

namespace {

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

std::string var(int i) { return "x" + std::to_string(i + 1); }

std::string product(const std::vector<int>& vars) {
  std::string s;
  for (std::size_t k = 0; k < vars.size(); ++k) {
    if (k) s += '*';
    s += var(vars[k]);
  }
  return s;
}

struct Term {
  std::string body;  // unsigned
  bool negative = false;
  std::vector<int> vars;
  std::vector<double> activation;
};

Term monomial(const std::vector<int>& vars, Rng& rng) {
  Term t;
  t.negative = uniform_below(rng, 2) == 1;
  t.body = product(vars);
  t.vars = vars;
  t.activation.assign(vars.size(), 1.0);
  return t;
}

// c * lead * (sum)^p with c = 1/k^p so the activated term has magnitude ~1.
Term power(const std::vector<int>& vars, const GrammarConfig& g, Rng& rng) {
  const int max_lead = std::min<int>(2, static_cast<int>(vars.size()) - 2);
  const int lead = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(max_lead) + 1));
  std::vector<int> head(vars.begin(), vars.begin() + lead);
  std::vector<int> sum(vars.begin() + lead, vars.end());
  const double p = round3(g.min_exponent + (g.max_exponent - g.min_exponent) * uniform_unit(rng));
  const double c = round3(std::pow(static_cast<double>(sum.size()), -p));
  Term t;
  t.negative = uniform_below(rng, 2) == 1;
  t.body = format_fixed(c, 3) + "*";
  if (!head.empty()) t.body += product(head) + "*";
  t.body += "(";
  for (std::size_t k = 0; k < sum.size(); ++k) {
    if (k) t.body += '+';
    t.body += var(sum[k]);
  }
  t.body += ")^" + format_fixed(p, 3);
  t.vars = vars;
  t.activation.assign(vars.size(), 1.0);
  return t;
}

// sigmoid(sum of +-k*atom + offset): fires only when every positive atom is 1
// and every negative atom is 0. Negative atoms are single variables.
Term sigmoid(const std::vector<int>& vars, const GrammarConfig& g, Rng& rng) {
  const int k = g.min_gain + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(g.max_gain - g.min_gain) + 1));
  struct Atom {
    std::vector<int> vars;
    bool positive;
  };
  std::vector<Atom> atoms;
  for (;;) {
    atoms.clear();
    std::size_t pos = 0;
    while (pos < vars.size()) {
      const std::size_t left = vars.size() - pos;
      if (uniform_below(rng, 10) < 3) {
        atoms.push_back({{vars[pos]}, false});
        ++pos;
      } else {
        const std::size_t len = 1 + uniform_below(rng, std::min<std::size_t>(3, left));
        atoms.push_back({std::vector<int>(vars.begin() + static_cast<std::ptrdiff_t>(pos),
                                          vars.begin() + static_cast<std::ptrdiff_t>(pos + len)),
                         true});
        pos += len;
      }
    }
    if (atoms.size() >= 2) break;
  }
  int positives = 0;
  Term t;
  t.negative = uniform_below(rng, 2) == 1;
  t.body = "sigmoid(";
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    if (atoms[a].positive) ++positives;
    if (a == 0) {
      t.body += atoms[a].positive ? "" : "-";
    } else {
      t.body += atoms[a].positive ? "+" : "-";
    }
    t.body += std::to_string(k) + "*" + product(atoms[a].vars);
    for (int v : atoms[a].vars) {
      t.vars.push_back(v);
      t.activation.push_back(atoms[a].positive ? 1.0 : 0.0);
    }
  }
  const double offset = 0.5 * k - static_cast<double>(k * positives);
  t.body += (offset < 0 ? "-" : "+") + format_real(std::abs(offset)) + ")";
  return t;
}

SynthFunction generate_one(const std::string& name, const GrammarConfig& g, Rng& rng) {
  const double total_weight = g.monomial_weight + g.power_weight + g.sigmoid_weight;
  for (;;) {
    const int n = g.min_n + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(g.max_n - g.min_n) + 1));
    const int terms = g.min_terms + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(g.max_terms - g.min_terms) + 1));
    if (2 * terms > n || terms * g.max_group < n) continue;
    std::vector<int> sizes(static_cast<std::size_t>(terms), 2);
    for (int extra = n - 2 * terms; extra > 0; --extra) {
      std::size_t t = 0;
      do {
        t = static_cast<std::size_t>(uniform_below(rng, static_cast<std::uint64_t>(terms)));
      } while (sizes[t] >= g.max_group);
      ++sizes[t];
    }

    SynthFunction f;
    f.name = name;
    f.n = n;
    f.binary = true;
    f.domain.assign(static_cast<std::size_t>(n), Interval{0.0, 1.0});
    f.truth.assign(static_cast<std::size_t>(n), std::nullopt);
    std::string expr;
    int start = 0;
    for (int ti = 0; ti < terms; ++ti) {
      std::vector<int> group;
      for (int v = start; v < start + sizes[static_cast<std::size_t>(ti)]; ++v) group.push_back(v);
      start += sizes[static_cast<std::size_t>(ti)];
      const bool overlap = ti > 0 && uniform_unit(rng) < g.overlap_probability;
      if (overlap) group.insert(group.begin(), group.front() - 1);

      Term term;
      bool placed = false;
      for (int attempt = 0; attempt < 20 && !placed; ++attempt) {
        const double pick = uniform_unit(rng) * total_weight;
        if (pick < g.monomial_weight) {
          term = monomial(group, rng);
        } else if (pick < g.monomial_weight + g.power_weight) {
          term = power(group, g, rng);
        } else {
          term = sigmoid(group, g, rng);
        }
        // Resample on conflicting deactivation values for a shared variable.
        placed = true;
        for (std::size_t k = 0; k < term.vars.size(); ++k) {
          const auto& existing = f.truth[static_cast<std::size_t>(term.vars[k])];
          if (existing && *existing != 1.0 - term.activation[k]) placed = false;
        }
      }
      if (!placed) {
        if (overlap) group.erase(group.begin());
        term = monomial(group, rng);
      }
      for (std::size_t k = 0; k < term.vars.size(); ++k) {
        f.truth[static_cast<std::size_t>(term.vars[k])] = 1.0 - term.activation[k];
      }
      const std::string signed_term = (term.negative ? "-" : "") + term.body;
      if (ti == 0) {
        expr = signed_term;
      } else {
        expr += term.negative ? " - " + term.body : " + " + term.body;
      }
      f.patterns.push_back({term.vars, term.activation, f.terms.size()});
      f.terms.push_back(signed_term);
    }
    f.expr = expr;
    return f;
  }
}

}  // namespace

std::vector<SynthFunction> generate_corpus(int count, std::uint64_t seed, const GrammarConfig& grammar) {
  if (count < 1) throw ArgumentError("corpus count must be >= 1");
  validate(grammar);
  std::vector<SynthFunction> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    std::string name = std::to_string(k + 1);
    name = "synth-" + std::string(name.size() < 3 ? 3 - name.size() : 0, '0') + name;
    out.push_back(generate_one(name, grammar, rng));
  }
  return out;
}

namespace {

struct Product {
  double coef = 1.0;
  std::vector<int> vars;
  std::vector<std::int32_t> others;  // non-variable, non-constant factors
};

void flatten_product(std::span<const ExprNode> nodes, std::int32_t k, Product& out) {
  const ExprNode& node = nodes[static_cast<std::size_t>(k)];
  switch (node.op) {
    case Op::kMul:
      flatten_product(nodes, node.lhs, out);
      flatten_product(nodes, node.rhs, out);
      return;
    case Op::kNeg:
      out.coef = -out.coef;
      flatten_product(nodes, node.lhs, out);
      return;
    case Op::kConst:
      out.coef *= node.constant;
      return;
    case Op::kVar:
      out.vars.push_back(node.var);
      return;
    default:
      out.others.push_back(k);
  }
}

// Splits a sum into signed summands.
void split_sum(std::span<const ExprNode> nodes, std::int32_t k, double sign,
               std::vector<std::pair<std::int32_t, double>>& out) {
  const ExprNode& node = nodes[static_cast<std::size_t>(k)];
  if (node.op == Op::kAdd || node.op == Op::kSub) {
    split_sum(nodes, node.lhs, sign, out);
    split_sum(nodes, node.rhs, node.op == Op::kSub ? -sign : sign, out);
  } else if (node.op == Op::kNeg) {
    split_sum(nodes, node.lhs, -sign, out);
  } else {
    out.emplace_back(k, sign);
  }
}

[[noreturn]] void not_template(const std::string& expr) {
  throw ArgumentError("'" + expr + "' is not a template instance");
}

}  // namespace

std::vector<std::optional<double>> template_truth(const std::string& expr, int n) {
  const ExprGraph g = ExprGraph::parse(expr);
  if (g.arity() > n) throw DimensionError("expression references x" + std::to_string(g.arity()) + " beyond n");
  const auto nodes = g.nodes();
  std::vector<std::pair<std::int32_t, double>> summands;
  split_sum(nodes, g.root(), 1.0, summands);

  std::vector<std::vector<std::pair<int, double>>> patterns;  // (var, activation)
  for (const auto& [k, sign] : summands) {
    (void)sign;
    Product p;
    flatten_product(nodes, k, p);
    std::vector<std::pair<int, double>> pattern;
    for (int v : p.vars) pattern.emplace_back(v, 1.0);
    if (p.others.size() > 1) not_template(expr);
    if (p.others.size() == 1) {
      const ExprNode& f = nodes[static_cast<std::size_t>(p.others.front())];
      std::vector<std::pair<std::int32_t, double>> inner;
      if (f.op == Op::kPow) {
        if (nodes[static_cast<std::size_t>(f.rhs)].op != Op::kConst) not_template(expr);
        split_sum(nodes, f.lhs, 1.0, inner);
        for (const auto& [ik, isign] : inner) {
          Product q;
          flatten_product(nodes, ik, q);
          if (!q.others.empty() || q.vars.size() > 1) not_template(expr);
          if (q.vars.empty()) continue;  // constant shift
          pattern.emplace_back(q.vars.front(), isign * q.coef > 0 ? 1.0 : 0.0);
        }
      } else if (f.op == Op::kSigmoid) {
        if (!p.vars.empty()) not_template(expr);
        split_sum(nodes, f.lhs, 1.0, inner);
        for (const auto& [ik, isign] : inner) {
          Product q;
          flatten_product(nodes, ik, q);
          if (!q.others.empty()) not_template(expr);
          for (int v : q.vars) pattern.emplace_back(v, isign * q.coef > 0 ? 1.0 : 0.0);
        }
      } else {
        not_template(expr);
      }
    }
    patterns.push_back(std::move(pattern));
  }

  std::vector<std::optional<double>> truth(static_cast<std::size_t>(n));
  std::vector<bool> conflict(static_cast<std::size_t>(n), false);
  for (const auto& pattern : patterns) {
    std::vector<int> distinct;
    for (const auto& [v, a] : pattern) distinct.push_back(v);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) continue;
    for (const auto& [v, a] : pattern) {
      const auto i = static_cast<std::size_t>(v);
      const double t = 1.0 - a;
      if (truth[i] && *truth[i] != t) conflict[i] = true;
      truth[i] = t;
    }
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (conflict[i]) truth[i].reset();
  }
  return truth;
}

double min_deactivation_change(const SynthFunction& f) {
  double smallest = std::numeric_limits<double>::infinity();
  for (const Pattern& p : f.patterns) {
    const ExprGraph g = ExprGraph::parse(f.terms.at(p.term));
    std::vector<double> input(static_cast<std::size_t>(f.n));
    for (std::size_t i = 0; i < input.size(); ++i) input[i] = f.truth[i].value_or(0.0);
    for (std::size_t k = 0; k < p.vars.size(); ++k) input[static_cast<std::size_t>(p.vars[k])] = p.activation[k];
    const double on = g.eval(input);
    for (std::size_t k = 0; k < p.vars.size(); ++k) {
      const auto v = static_cast<std::size_t>(p.vars[k]);
      std::vector<double> flipped = input;
      flipped[v] = f.truth[v].value_or(1.0 - p.activation[k]);
      smallest = std::min(smallest, std::abs(on - g.eval(flipped)));
    }
  }
  return smallest;
}

nlohmann::json to_json(const SynthFunction& f) {
  nlohmann::json j;
  j["name"] = f.name;
  j["n"] = f.n;
  j["expr"] = f.expr;
  if (f.binary) {
    j["domain"] = "binary";
  } else {
    nlohmann::json d = nlohmann::json::array();
    for (const auto& iv : f.domain) d.push_back({iv.lo, iv.hi});
    j["domain"] = std::move(d);
  }
  nlohmann::json t = nlohmann::json::array();
  for (const auto& v : f.truth) {
    if (v) {
      t.push_back(*v);
    } else {
      t.push_back(nullptr);
    }
  }
  j["truth"] = std::move(t);
  return j;
}

SynthFunction synth_from_json(const nlohmann::json& j) {
  SynthFunction f;
  try {
    f.name = j.at("name").get<std::string>();
    f.n = j.at("n").get<int>();
    f.expr = j.at("expr").get<std::string>();
    if (f.n < 1 || f.n > kMaxPlayers) throw ConfigError("function '" + f.name + "': n outside [1, 25]");
    const auto& d = j.at("domain");
    if (d.is_string()) {
      if (d.get<std::string>() != "binary") throw ConfigError("domain must be \"binary\" or a list of intervals");
      f.binary = true;
      f.domain.assign(static_cast<std::size_t>(f.n), Interval{0.0, 1.0});
    } else {
      f.binary = false;
      for (const auto& iv : d) f.domain.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
      if (f.domain.size() != static_cast<std::size_t>(f.n)) {
        throw ConfigError("function '" + f.name + "': domain length differs from n");
      }
    }
    for (const auto& t : j.at("truth")) {
      if (t.is_null()) {
        f.truth.emplace_back(std::nullopt);
      } else {
        f.truth.emplace_back(t.get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed function record: ") + e.what());
  }
  if (f.truth.size() != static_cast<std::size_t>(f.n)) {
    throw ConfigError("function '" + f.name + "': truth length differs from n");
  }
  const ExprGraph g = ExprGraph::parse(f.expr);
  if (g.arity() > f.n) throw ConfigError("function '" + f.name + "' references x" + std::to_string(g.arity()) + " beyond n");
  return f;
}

std::string to_jsonl(const std::vector<SynthFunction>& corpus) {
  std::string out;
  for (const auto& f : corpus) out += to_json(f).dump() + "\n";
  return out;
}

std::vector<SynthFunction> parse_corpus(const std::string& text) {
  std::vector<SynthFunction> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(synth_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("corpus line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SynthFunction> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

std::vector<std::vector<double>> corner_batch(const SynthFunction& f, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> batch(count, std::vector<double>(static_cast<std::size_t>(f.n)));
  for (auto& row : batch) {
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = uniform_below(rng, 2) ? f.domain[i].hi : f.domain[i].lo;
  }
  return batch;
}

GameTemplate make_template(const SynthFunction& f, std::vector<std::vector<double>> batch) {
  GameTemplate t;
  t.backend = std::make_shared<ExprFunction>(ExprGraph::parse(f.expr), f.n);
  t.bounds = f.domain;
  t.batch = std::move(batch);
  return t;
}

double VerifySummary::pooled_accuracy(LossKind loss, double init) const {
  for (const auto& p : pooled) {
    if (p.loss == loss && p.init == init) return p.score.ratio();
  }
  throw ArgumentError("no pooled entry for that loss and init");
}

VerifySummary verify(const std::vector<SynthFunction>& corpus, const VerifyOptions& options,
                     const std::function<void(std::size_t, std::size_t)>& progress) {
  if (corpus.empty()) throw ArgumentError("verify needs a non-empty corpus");
  if (options.inits.empty() || options.losses.empty()) throw ConfigError("verify needs at least one loss and init");
  if (options.batch_size < 1) throw ConfigError("batch size must be >= 1");
  validate(options.learn);

  struct Job {
    std::size_t function;
    std::size_t loss;
    std::size_t init;
  };
  std::vector<Job> jobs;
  for (std::size_t fi = 0; fi < corpus.size(); ++fi) {
    if (corpus[fi].annotated() == 0) throw ArgumentError("function '" + corpus[fi].name + "' has no annotated truth");
    for (std::size_t li = 0; li < options.losses.size(); ++li) {
      for (std::size_t ii = 0; ii < options.inits.size(); ++ii) jobs.push_back({fi, li, ii});
    }
  }

  VerifySummary summary;
  summary.rows.resize(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      const Job& job = jobs[k];
      try {
        const SynthFunction& f = corpus[job.function];
        const double pos = options.inits[job.init];
        LearnConfig cfg = options.learn;
        cfg.loss = options.losses[job.loss];
        cfg.init.kind = InitKind::kExplicit;
        cfg.init.values.resize(static_cast<std::size_t>(f.n));
        for (std::size_t i = 0; i < cfg.init.values.size(); ++i) {
          cfg.init.values[i] = f.domain[i].lo + pos * (f.domain[i].hi - f.domain[i].lo);
        }
        cfg.seed = derive_seed(options.learn.seed, job.function, job.init, job.loss);
        const GameTemplate game =
            make_template(f, corner_batch(f, options.batch_size, derive_seed(options.learn.seed, job.function)));
        const LearnState state = learn(cfg, game);
        if (state.error) throw EvaluationError(f.name + ": " + *state.error, 0);
        VerifyRow& row = summary.rows[k];
        row.function = f.name;
        row.loss = cfg.loss;
        row.init = pos;
        row.b = state.b.values();
        row.score = accuracy_count(row.b, f.truth, f.domain);
        row.final_loss = state.loss_trace.empty() ? 0.0 : state.loss_trace.back();
        row.steps = state.steps;
      } catch (...) {
        errors[k] = std::current_exception();
      }
      const std::size_t finished = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(finished, jobs.size());
      }
    }
  };

  const int threads = std::max(1, std::min<int>(options.jobs, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t li = 0; li < options.losses.size(); ++li) {
    for (std::size_t ii = 0; ii < options.inits.size(); ++ii) {
      VerifySummary::Pooled p{options.losses[li], options.inits[ii], {}};
      for (std::size_t k = 0; k < jobs.size(); ++k) {
        if (jobs[k].loss != li || jobs[k].init != ii) continue;
        p.score.correct += summary.rows[k].score.correct;
        p.score.annotated += summary.rows[k].score.annotated;
      }
      summary.pooled.push_back(p);
    }
  }
  return summary;
}

std::string verify_csv(const VerifySummary& summary) {
  std::string out = "function,loss,init,accuracy,final_loss,steps\n";
  for (const auto& r : summary.rows) {
    out += r.function + "," + loss_name(r.loss) + "," + format_real(r.init) + "," + format_real(r.score.ratio()) +
           "," + format_real(r.final_loss) + "," + std::to_string(r.steps) + "\n";
  }
  for (const auto& p : summary.pooled) {
    out += "pooled," + loss_name(p.loss) + "," + format_real(p.init) + "," + format_real(p.score.ratio()) + ",,\n";
  }
  return out;
}

}  // namespace nosignal
