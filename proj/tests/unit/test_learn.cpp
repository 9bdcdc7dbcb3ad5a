#include <cmath>
#include <memory>

#include "doctest.h"
#include "helpers.hpp"
#include "nosignal/errors.hpp"
#include "nosignal/expr.hpp"
#include "nosignal/learn.hpp"
#include "nosignal/mlp.hpp"
#include "nosignal/synth.hpp"

using namespace nosignal;

namespace {

GameTemplate expr_template(const char* src, int n, std::vector<std::vector<double>> batch) {
  GameTemplate t;
  t.backend = std::make_shared<ExprFunction>(ExprGraph::parse(src), n);
  t.bounds.assign(static_cast<std::size_t>(n), Interval{0.0, 1.0});
  t.batch = std::move(batch);
  return t;
}

LearnConfig pinned(LossKind loss, int m) {
  LearnConfig c;
  c.loss = loss;
  c.fixed_order = m;
  c.orders_per_step = 1;
  return c;
}

MlpModel random_mlp(int in, int hidden, int classes, Activation act, std::uint64_t seed) {
  Rng rng(seed);
  auto layer = [&](int a, int b, Activation f) {
    DenseLayer l;
    l.in = a;
    l.out = b;
    l.activation = f;
    l.weights.resize(static_cast<std::size_t>(a * b));
    l.bias.resize(static_cast<std::size_t>(b));
    for (double& w : l.weights) w = 2.0 * uniform_unit(rng) - 1.0;
    for (double& w : l.bias) w = 0.4 * uniform_unit(rng) - 0.2;
    return l;
  };
  return MlpModel({layer(in, hidden, act), layer(hidden, hidden, act), layer(hidden, classes, Activation::kIdentity)}, 1);
}

// Max relative deviation of the analytic gradient from central differences
// (h = 1e-4) with draws pinned to `step`.
double fd_mismatch(const GameTemplate& game, const LearnConfig& config, const std::vector<double>& b,
                   std::uint64_t step) {
  const LossResult r = evaluate_loss(game, config, b, step);
  const auto fd = testing::central_diff(
      [&](const std::vector<double>& p) { return evaluate_loss(game, config, p, step).loss; }, b, 1e-4);
  double worst = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    worst = std::max(worst, std::abs(r.grad[j] - fd[j]) / std::max(1e-2, std::abs(fd[j])));
  }
  return worst;
}

SynthFunction row_function(const char* expr, int n) {
  SynthFunction f;
  f.name = "row";
  f.n = n;
  f.expr = expr;
  f.domain.assign(static_cast<std::size_t>(n), Interval{0.0, 1.0});
  f.truth = template_truth(expr, n);
  return f;
}

std::vector<double> truth_vector(const SynthFunction& f) {
  std::vector<double> b(static_cast<std::size_t>(f.n), 0.5);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (f.truth[i]) b[i] = *f.truth[i];
  }
  return b;
}

}  // namespace

TEST_CASE("loss examples on the AND game") {
  const GameTemplate g = expr_template("x1*x2", 2, {{1.0, 1.0}});
  const std::vector<double> zero{0.0, 0.0}, half{0.5, 0.5};

  LossResult r = loss_shapley(g, pinned(LossKind::kShapley, 0), zero);
  CHECK(r.loss == 0.0);
  CHECK(r.grad == std::vector<double>{0.0, 0.0});

  r = loss_shapley(g, pinned(LossKind::kShapley, 0), half);
  CHECK(r.loss == doctest::Approx(0.5).epsilon(1e-15));

  r = loss_marginal(g, pinned(LossKind::kMarginal, 0), zero);
  CHECK(r.loss == 0.0);
  // one context per (i, m = 0): |v({i}) - v(empty)| = 0.25 for each of two players
  r = loss_marginal(g, pinned(LossKind::kMarginal, 0), half);
  CHECK(r.loss / 2.0 == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("additive games have order-independent Shapley components") {
  const GameTemplate g = expr_template("2*x1 - x2 + 0.5*x3", 3, {{1.0, 0.0, 1.0}});
  const std::vector<double> b{0.3, 0.6, 0.1};
  const double l0 = loss_shapley(g, pinned(LossKind::kShapley, 0), b).loss;
  for (int m = 1; m <= 2; ++m) {
    CHECK(loss_shapley(g, pinned(LossKind::kShapley, m), b).loss == doctest::Approx(l0).epsilon(1e-14));
  }
  // |2*0.7| + |-1*(-0.6)| + |0.5*0.9|
  CHECK(l0 == doctest::Approx(1.4 + 0.6 + 0.45));
}

TEST_CASE("loss gradients match finite differences") {
  const SynthFunction row1 = row_function("-0.185*x1*(x2+x3)^2.432 - x4*x5*x6*x7", 7);
  const SynthFunction row2 =
      row_function("-sigmoid(-4*x1-4*x2-4*x3+2)-0.011*x4*(x5+x6+x7+x8+x9)^2.341", 9);
  Rng rng(8);
  for (const SynthFunction* f : {&row1, &row2}) {
    const GameTemplate g = make_template(*f, corner_batch(*f, 4, 3));
    for (LossKind loss : {LossKind::kShapley, LossKind::kMarginal}) {
      LearnConfig c;
      c.loss = loss;
      c.seed = 17;
      for (std::uint64_t step = 0; step < 5; ++step) {
        std::vector<double> b(static_cast<std::size_t>(f->n));
        for (double& v : b) v = 0.1 + 0.8 * uniform_unit(rng);
        CHECK_MESSAGE(fd_mismatch(g, c, b, step) < 1e-3, loss_name(loss));
      }
    }
  }
}

TEST_CASE("log-odds games on an MLP: loss gradients") {
  GameTemplate g;
  g.backend = std::make_shared<MlpFunction>(random_mlp(4, 6, 3, Activation::kSigmoid, 2), 1);
  g.transform = Transform::kLogOdds;
  g.bounds.assign(4, Interval{0.0, 1.0});
  g.batch = {{0.9, 0.1, 0.4, 0.7}, {0.2, 0.8, 0.6, 0.3}};
  for (LossKind loss : {LossKind::kShapley, LossKind::kMarginal}) {
    LearnConfig c;
    c.loss = loss;
    CHECK(fd_mismatch(g, c, {0.3, 0.5, 0.2, 0.6}, 1) < 1e-3);
  }
}

TEST_CASE("feature variant") {
  LearnConfig c;
  c.loss = LossKind::kMarginal;
  c.feature_variant = true;
  const GameTemplate expr = expr_template("x1*x2", 2, {{1.0, 1.0}});
  CHECK_THROWS_AS(evaluate_loss(expr, c, std::vector<double>{0.5, 0.5}, 0), CapabilityError);

  for (Activation act : {Activation::kSigmoid, Activation::kRelu}) {
    GameTemplate g;
    g.backend = std::make_shared<MlpFunction>(random_mlp(5, 7, 2, act, 4), 0);
    g.bounds.assign(5, Interval{0.0, 1.0});
    g.batch = {{0.9, 0.1, 0.4, 0.7, 0.5}};
    const std::vector<double> b{0.31, 0.52, 0.23, 0.64, 0.45};
    CHECK(evaluate_loss(g, c, b, 0).loss > 0.0);
    CHECK(fd_mismatch(g, c, b, 0) < 1e-3);
  }

  c.loss = LossKind::kShapley;
  GameTemplate g;
  g.backend = std::make_shared<MlpFunction>(random_mlp(2, 3, 2, Activation::kRelu, 4), 0);
  g.bounds.assign(2, Interval{0.0, 1.0});
  g.batch = {{1.0, 1.0}};
  CHECK_THROWS_AS(learn(c, g), ConfigError);
}

TEST_CASE("config validation") {
  LearnConfig c;
  c.steps = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.contexts_per_order = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.lambda_frac = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.lambda_frac = 1.5;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.step_size = -1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.grad_patience = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);

  CHECK(max_order(LearnConfig{}, 2) == 1);
  CHECK(max_order(LearnConfig{}, 7) == 4);  // round(3.5)
  LearnConfig full;
  full.lambda_frac = 1.0;
  CHECK(max_order(full, 7) == 6);

  const GameTemplate g = expr_template("x1*x2", 2, {{1.0, 1.0}});
  LearnConfig zero_steps;
  zero_steps.steps = 0;
  CHECK_THROWS_AS(learn(zero_steps, g), ConfigError);

  GameTemplate bad = g;
  bad.batch = {{1.0}};
  CHECK_THROWS_AS(learn(LearnConfig{}, bad), DimensionError);
}

TEST_CASE("initial baselines") {
  GameTemplate g = expr_template("x1*x2", 2, {{1.0, 1.0}});
  g.bounds = {{0.0, 1.0}, {2.0, 4.0}};
  LearnConfig c;
  CHECK(initial_baseline(c, g) == std::vector<double>{0.5, 3.0});
  c.init.kind = InitKind::kZero;
  CHECK(initial_baseline(c, g) == std::vector<double>{0.0, 2.0});
  c.init = {InitKind::kExplicit, {0.25, 9.0}};
  CHECK(initial_baseline(c, g) == std::vector<double>{0.25, 4.0});
  g.feature_means = {0.1, 2.5};
  c.init.kind = InitKind::kMean;
  CHECK(initial_baseline(c, g) == std::vector<double>{0.1, 2.5});
}

TEST_CASE("learning on the AND game") {
  LearnConfig c;
  c.loss = LossKind::kMarginal;
  c.lambda_frac = 0.5;
  c.init = {InitKind::kExplicit, {0.5, 0.5}};

  // With only x = (1,1) every marginal benefit vanishes as b -> x.
  LearnState s = learn(c, expr_template("x1*x2", 2, {{1.0, 1.0}}));
  CHECK(s.b[0] > 0.9);
  CHECK(s.b[1] > 0.9);
  CHECK_FALSE(s.error.has_value());

  // Over all four corners the AND pattern's deactivating baseline is 0. Some
  // steps see exactly cancelling draws; those must not end the run.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    c.seed = seed;
    s = learn(c, expr_template("x1*x2", 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
    CHECK(s.b[0] < 0.1);
    CHECK(s.b[1] < 0.1);
  }
}

TEST_CASE("learn: projection, determinism, traces") {
  const SynthFunction f = row_function("-0.185*x1*(x2+x3)^2.432 - x4*x5*x6*x7", 7);
  const GameTemplate g = make_template(f, corner_batch(f, 16, 5));
  LearnConfig c;
  c.step_size = 5.0;  // large steps hit the bounds
  c.steps = 40;
  c.seed = 9;
  const LearnState a = learn(c, g);
  const LearnState b = learn(c, g);
  CHECK(a.b.values() == b.b.values());
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.grad_norm_trace == b.grad_norm_trace);
  CHECK(a.loss_trace.size() <= 40);
  CHECK(a.loss_trace.size() == static_cast<std::size_t>(a.steps));
  for (double v : a.b.values()) CHECK((v >= 0.0 && v <= 1.0));

  c.seed = 10;
  CHECK(learn(c, g).loss_trace != a.loss_trace);
}

TEST_CASE("convergence stops early on a flat loss") {
  // Additive game: every marginal benefit is constant in b.
  const GameTemplate g = expr_template("x1 + x2", 2, {{1.0, 0.0}});
  LearnConfig c;
  c.loss = LossKind::kMarginal;
  c.steps = 1000;
  const LearnState s = learn(c, g);
  CHECK(s.converged);
  CHECK(s.steps < 1000);
  c.min_steps = 500;
  CHECK(learn(c, g).steps >= 500);
}

TEST_CASE("backend failures end learning with a partial trace") {
  const GameTemplate g = expr_template("1/(x1 - 0.25) + x2", 2, {{1.0, 1.0}});
  LearnConfig c;
  c.init = {InitKind::kExplicit, {0.25, 0.5}};
  const LearnState s = learn(c, g);
  REQUIRE(s.error.has_value());
  CHECK(s.loss_trace.empty());
}

TEST_CASE("starting at the truth stays there") {
  const auto corpus = generate_corpus(20, 77);
  for (const SynthFunction& f : corpus) {
    const GameTemplate g = make_template(f, corner_batch(f, 32, 1));
    const std::vector<double> truth = truth_vector(f);
    for (LossKind loss : {LossKind::kShapley, LossKind::kMarginal}) {
      LearnConfig c;
      c.loss = loss;
      c.init = {InitKind::kExplicit, truth};
      const LearnState s = learn(c, g);
      for (std::size_t i = 0; i < truth.size(); ++i) {
        if (f.truth[i]) CHECK_MESSAGE(std::abs(s.b[i] - truth[i]) < 0.1, f.expr);
      }
    }
  }
}

TEST_CASE("the ground truth has lower marginal loss than the midpoint") {
  const SynthFunction f = row_function("-0.185*x1*(x2+x3)^2.432 - x4*x5*x6*x7", 7);
  const std::vector<double> truth = truth_vector(f);
  const std::vector<double> mid(7, 0.5);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const GameTemplate g = make_template(f, corner_batch(f, 32, seed));
    LearnConfig c;
    c.seed = seed;
    CHECK(loss_marginal(g, c, truth).loss < loss_marginal(g, c, mid).loss);
  }
}

TEST_CASE("accuracy rule") {
  using T = std::vector<std::optional<double>>;
  const T truth{0.0, 1.0};
  CHECK(accuracy(std::vector<double>{0.2, 0.8}, truth) == 1.0);
  CHECK(accuracy(std::vector<double>{0.6, 0.8}, truth) == 0.5);
  CHECK(accuracy(std::vector<double>{0.5, 0.5}, truth) == 0.0);

  const T partial{0.0, std::nullopt, 1.0};
  const AccuracyCount n = accuracy_count(std::vector<double>{0.1, 0.9, 0.2}, partial);
  CHECK(n.annotated == 2);
  CHECK(n.correct == 1);

  const std::vector<Interval> domain{{0.0, 10.0}, {-1.0, 1.0}};
  CHECK(accuracy(std::vector<double>{4.0, 0.1}, T{0.0, 1.0}, domain) == 1.0);
  CHECK(accuracy(std::vector<double>{6.0, 0.0}, T{0.0, 1.0}, domain) == 0.0);

  CHECK_THROWS_AS(accuracy(std::vector<double>{0.1}, T{std::nullopt}), ArgumentError);
  CHECK_THROWS_AS(accuracy(std::vector<double>{0.1}, truth), DimensionError);
}
