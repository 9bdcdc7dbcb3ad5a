#include <cmath>
#include <set>
#include <string>

#include "doctest.h"
#include "nosignal/attribution.hpp"
#include "nosignal/errors.hpp"
#include "nosignal/expr.hpp"
#include "nosignal/synth.hpp"

using namespace nosignal;

namespace {

using Truth = std::vector<std::optional<double>>;

Truth from_sets(int n, std::set<int> ones, std::set<int> zeros, double lo = 0.0, double hi = 1.0) {
  Truth t(static_cast<std::size_t>(n));
  for (int i : ones) t[static_cast<std::size_t>(i - 1)] = hi;
  for (int i : zeros) t[static_cast<std::size_t>(i - 1)] = lo;
  return t;
}

SynthFunction simple(const char* expr, int n, Truth truth) {
  SynthFunction f;
  f.name = expr;
  f.n = n;
  f.expr = expr;
  f.domain.assign(static_cast<std::size_t>(n), Interval{0.0, 1.0});
  f.truth = std::move(truth);
  return f;
}

}  // namespace

TEST_CASE("template truth on reference functions") {
  CHECK(template_truth("-0.185*x1*(x2+x3)^2.432-x4*x5*x6*x7", 7) == from_sets(7, {}, {1, 2, 3, 4, 5, 6, 7}));
  CHECK(template_truth("-sigmoid(-4*x1-4*x2-4*x3+2.00)-0.011*x4*(x5+x6+x7+x8+x9)^2.341", 9) ==
        from_sets(9, {1, 2, 3}, {4, 5, 6, 7, 8, 9}));
  CHECK(template_truth("-x1*x2*x3+sigmoid(-5*x4*x5*x6*x7+2.50)-x8*x9", 9) ==
        from_sets(9, {4, 5, 6, 7}, {1, 2, 3, 8, 9}));
  CHECK(template_truth("-sigmoid(4*x1-4*x2+4*x3-6.00)-x4*x5*x6*x7-x8*x9*x10", 10) ==
        from_sets(10, {2}, {1, 3, 4, 5, 6, 7, 8, 9, 10}));
  CHECK(template_truth("sigmoid(3*x1*x2-3*x3-1.5)-x4*x5+0.25*(x6+x7)^2", 7) ==
        from_sets(7, {3}, {1, 2, 4, 5, 6, 7}));
}

TEST_CASE("template truth edge cases") {
  // single-variable terms form no pattern
  CHECK(template_truth("x1 + x2*x3", 3) == from_sets(3, {}, {2, 3}));
  // conflicting patterns leave the variable unannotated
  const Truth t = template_truth("x1*x2 + sigmoid(-4*x2-4*x3+2)", 3);
  CHECK(t[0] == 0.0);
  CHECK_FALSE(t[1].has_value());
  CHECK(t[2] == 1.0);
  CHECK_THROWS_AS(template_truth("sin(x1*x2)", 2), ArgumentError);
}

TEST_CASE("generated corpus") {
  const auto a = generate_corpus(100, 2024);
  const auto b = generate_corpus(100, 2024);
  REQUIRE(a.size() == 100);
  CHECK(a.front().name == "synth-001");
  CHECK(a.back().name == "synth-100");
  CHECK(generate_corpus(3, 2025).front().expr != a.front().expr);
  const GrammarConfig grammar;
  std::size_t annotated = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const SynthFunction& f = a[k];
    CHECK(f.expr == b[k].expr);
    CHECK(f.truth == b[k].truth);
    CHECK((f.n >= grammar.min_n && f.n <= grammar.max_n));
    CHECK((f.terms.size() >= 2 && f.terms.size() <= 4));
    CHECK(f.binary);
    CHECK(ExprGraph::parse(f.expr).arity() <= f.n);
    CHECK_MESSAGE(template_truth(f.expr, f.n) == f.truth, f.expr);
    CHECK_MESSAGE(min_deactivation_change(f) >= 0.1, f.expr);
    for (const Pattern& p : f.patterns) {
      CHECK(p.vars.size() >= 2);
      CHECK(p.vars.size() == p.activation.size());
      CHECK(p.term < f.terms.size());
    }
    annotated += f.annotated();
  }
  CHECK(annotated > 500);
}

TEST_CASE("monomial-only functions concentrate at their designed orders") {
  int seen = 0;
  for (const SynthFunction& f : generate_corpus(100, 2024)) {
    bool monomials = true;
    for (const std::string& t : f.terms) monomials = monomials && t.find_first_of("^(") == std::string::npos;
    if (!monomials) continue;
    ++seen;
    std::vector<double> b(static_cast<std::size_t>(f.n), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = f.truth[i].value_or(0.0);
    const GameSpec g(std::make_shared<ExprFunction>(ExprGraph::parse(f.expr), f.n),
                     std::vector<double>(static_cast<std::size_t>(f.n), 1.0), BaselineVector(b));
    const OrderSpectrum spec = order_spectrum(g);
    std::set<std::size_t> designed;
    for (const Pattern& p : f.patterns) designed.insert(p.vars.size());
    double mass = 0.0;
    for (std::size_t m : designed) mass += spec.r(static_cast<int>(m));
    CHECK_MESSAGE(mass >= 0.95, f.expr);
  }
  CHECK(seen > 0);
}

TEST_CASE("grammar validation") {
  GrammarConfig g;
  g.min_n = 9;
  g.max_n = 8;
  CHECK_THROWS_AS(validate(g), ConfigError);
  g = {};
  g.min_terms = 0;
  CHECK_THROWS_AS(validate(g), ConfigError);
  g = {};
  g.monomial_weight = g.power_weight = g.sigmoid_weight = 0.0;
  CHECK_THROWS_AS(validate(g), ConfigError);
  CHECK_THROWS_AS(generate_corpus(-1, 0), ArgumentError);
}

TEST_CASE("bundled benchmark suite") {
  const auto suite = tsang_suite();
  REQUIRE(suite.size() == 10);
  std::size_t annotated = 0;
  for (const SynthFunction& f : suite) {
    annotated += f.annotated();
    CHECK_FALSE(f.binary);
    const ExprFunction fn(ExprGraph::parse(f.expr), f.n);
    for (double v : {0.001, 0.5, 0.999}) {
      const std::vector<double> x(static_cast<std::size_t>(f.n), v);
      CHECK_MESSAGE(std::isfinite(fn.value(x)), f.name);
    }
    for (const Interval& d : f.domain) {
      CHECK(d.lo == 0.001);
      CHECK(d.hi == 0.999);
    }
  }
  CHECK(annotated == 61);
  CHECK(suite[0].truth == from_sets(10, {5, 8, 10}, {1, 2, 7, 9}, 0.001, 0.999));
  CHECK(suite[9].n == 9);
}

TEST_CASE("corpus serialisation") {
  auto corpus = generate_corpus(5, 3);
  corpus.push_back(tsang_suite()[4]);
  const std::string text = to_jsonl(corpus);
  const auto back = parse_corpus(text);
  REQUIRE(back.size() == corpus.size());
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    CHECK(back[k].name == corpus[k].name);
    CHECK(back[k].expr == corpus[k].expr);
    CHECK(back[k].n == corpus[k].n);
    CHECK(back[k].truth == corpus[k].truth);
    CHECK(back[k].binary == corpus[k].binary);
    CHECK(back[k].domain.size() == corpus[k].domain.size());
    CHECK(back[k].domain.back().hi == corpus[k].domain.back().hi);
  }
  CHECK(to_jsonl(back) == text);

  try {
    parse_corpus(text + "{not json\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_corpus(R"({"name":"a","n":2,"expr":"x1*x3","domain":"binary","truth":[0,0]})"),
                  ConfigError);
}

TEST_CASE("corner batches") {
  const SynthFunction f = tsang_suite()[0];
  const auto batch = corner_batch(f, 50, 4);
  CHECK(batch.size() == 50);
  for (const auto& x : batch) {
    for (double v : x) CHECK((v == 0.001 || v == 0.999));
  }
  CHECK(corner_batch(f, 50, 4) == batch);
}

TEST_CASE("verify") {
  VerifyOptions options;
  CHECK_THROWS_AS(verify({}, options), ArgumentError);

  const std::vector<SynthFunction> and2{simple("x1*x2", 2, {0.0, 0.0})};
  const VerifySummary s = verify(and2, options);
  CHECK(s.rows.size() == 6);
  for (LossKind loss : options.losses) {
    for (double init : options.inits) CHECK(s.pooled_accuracy(loss, init) == 1.0);
  }
  const std::string csv = verify_csv(s);
  CHECK(csv.rfind("function,loss,init,accuracy,final_loss,steps\n", 0) == 0);
  CHECK(csv.find("pooled,shapley,0.5,1") != std::string::npos);

  // results do not depend on the thread count
  options.learn.steps = 30;
  const auto corpus = generate_corpus(4, 8);
  const VerifySummary one = verify(corpus, options);
  options.jobs = 3;
  std::size_t calls = 0;
  const VerifySummary three = verify(corpus, options, [&](std::size_t, std::size_t) { ++calls; });
  CHECK(calls == 24);
  REQUIRE(one.rows.size() == three.rows.size());
  for (std::size_t k = 0; k < one.rows.size(); ++k) {
    CHECK(one.rows[k].b == three.rows[k].b);
    CHECK(one.rows[k].final_loss == three.rows[k].final_loss);
  }
  CHECK(verify_csv(one) == verify_csv(three));
}
