#include "nosignal/learn.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "nosignal/coalition.hpp"
#include "nosignal/errors.hpp"
#include "nosignal/mlp.hpp"
#include "nosignal/random.hpp"

namespace nosignal {

std::string loss_name(LossKind k) { return k == LossKind::kShapley ? "shapley" : "marginal"; }

LossKind parse_loss(const std::string& name) {
  if (name == "shapley") return LossKind::kShapley;
  if (name == "marginal") return LossKind::kMarginal;
  throw ConfigError("unknown loss '" + name + "' (expected shapley or marginal)");
}

void validate(const LearnConfig& c) {
  if (c.steps < 1) throw ConfigError("steps must be >= 1");
  if (c.contexts_per_order < 1) throw ConfigError("contexts_per_order must be >= 1");
  if (c.orders_per_step < 1) throw ConfigError("orders_per_step must be >= 1");
  if (!(c.lambda_frac > 0.0 && c.lambda_frac <= 1.0)) throw ConfigError("lambda_frac must lie in (0, 1]");
  if (!(c.step_size > 0.0) || !std::isfinite(c.step_size)) throw ConfigError("step_size must be positive");
  if (c.ema_window < 1) throw ConfigError("ema_window must be >= 1");
  if (!(c.ema_alpha > 0.0 && c.ema_alpha <= 1.0)) throw ConfigError("ema_alpha must lie in (0, 1]");
  if (c.min_steps < 0) throw ConfigError("min_steps must be >= 0");
  if (c.grad_patience < 1) throw ConfigError("grad_patience must be >= 1");
  if (c.fixed_order && *c.fixed_order < 0) throw ConfigError("fixed order must be >= 0");
}

void validate(const GameTemplate& g) {
  if (!g.backend) throw ArgumentError("game template needs a backend");
  const int n = g.players();
  if (n < 1 || n > kMaxPlayers) throw CapacityError("game size outside [1, 25]");
  if (g.backend->arity() != n) {
    throw DimensionError("backend expects " + std::to_string(g.backend->arity()) + " inputs, bounds cover " +
                         std::to_string(n));
  }
  if (g.batch.empty()) throw ArgumentError("learning needs at least one input sample");
  for (const auto& x : g.batch) {
    if (x.size() != static_cast<std::size_t>(n)) throw DimensionError("batch row length differs from n");
  }
  for (const auto& iv : g.bounds) {
    if (iv.lo > iv.hi) throw ArgumentError("empty bound interval");
  }
  if (!g.feature_means.empty() && g.feature_means.size() != static_cast<std::size_t>(n)) {
    throw DimensionError("feature_means length differs from n");
  }
}

int max_order(const LearnConfig& config, int n) {
  const int lambda = static_cast<int>(std::lround(config.lambda_frac * n));
  return std::clamp(lambda, 0, n - 1);
}

std::vector<double> initial_baseline(const LearnConfig& config, const GameTemplate& game) {
  const std::size_t n = game.bounds.size();
  std::vector<double> b(n, 0.0);
  switch (config.init.kind) {
    case InitKind::kZero:
      break;
    case InitKind::kMean:
      for (std::size_t i = 0; i < n; ++i) {
        b[i] = game.feature_means.empty() ? game.bounds[i].midpoint() : game.feature_means[i];
      }
      break;
    case InitKind::kExplicit:
      if (config.init.values.size() != n) {
        throw DimensionError("explicit init has " + std::to_string(config.init.values.size()) +
                             " values, game has " + std::to_string(n));
      }
      b = config.init.values;
      break;
  }
  for (std::size_t i = 0; i < n; ++i) b[i] = game.bounds[i].clamp(b[i]);
  return b;
}

namespace {

struct Draw {
  int order = 0;
  std::vector<std::vector<Coalition>> contexts;  // per variable
};

std::vector<Draw> make_draws(const LearnConfig& config, int n, std::uint64_t step) {
  const int lambda = max_order(config, n);
  if (config.fixed_order && *config.fixed_order > n - 1) {
    throw ConfigError("fixed order exceeds n - 1");
  }
  const Coalition full = Coalition::full(n);
  std::vector<Draw> draws(static_cast<std::size_t>(config.orders_per_step));
  for (std::size_t d = 0; d < draws.size(); ++d) {
    Rng rng(derive_seed(config.seed, step, d));
    Draw& draw = draws[d];
    draw.order = config.fixed_order ? *config.fixed_order
                                    : static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(lambda) + 1));
    draw.contexts.resize(static_cast<std::size_t>(n));
    const double total = binomial(n - 1, draw.order);
    for (int i = 0; i < n; ++i) {
      const Coalition pool = full.without(i);
      auto& ctx = draw.contexts[static_cast<std::size_t>(i)];
      if (total <= static_cast<double>(config.contexts_per_order)) {
        ctx = subsets_of_size(pool, draw.order);
      } else {
        ctx = sample_subsets_of_size(pool, draw.order, static_cast<std::size_t>(config.contexts_per_order), rng);
      }
    }
  }
  return draws;
}

// v(S) and dv(S)/db for one batch row, cached by bit pattern within a call.
class ScalarPoints {
 public:
  ScalarPoints(const GameTemplate& game, std::span<const double> x, std::span<const double> b)
      : game_(game), x_(x), b_(b), n_(x.size()), masked_(x.size()) {}

  // Returns the offset of (v, grad[n]) in storage_.
  std::size_t at(Coalition s) {
    const auto it = index_.find(s.bits());
    if (it != index_.end()) return it->second;
    const std::size_t off = storage_.size();
    storage_.resize(off + 1 + n_);
    mask_into(x_, s, b_, masked_);
    std::span<double> grad(storage_.data() + off + 1, n_);
    double f = 0.0;
    try {
      f = game_.backend->value_and_gradient(masked_, grad);
    } catch (const DomainError& e) {
      throw EvaluationError(e.what(), s.bits());
    }
    double scale = 1.0;
    double v = f;
    if (game_.transform == Transform::kLogOdds) {
      v = log_odds(f);
      scale = log_odds_derivative(f);
    }
    for (std::size_t j = 0; j < n_; ++j) grad[j] = s.contains(static_cast<int>(j)) ? 0.0 : grad[j] * scale;
    storage_[off] = v;
    index_.emplace(s.bits(), off);
    return off;
  }
  double value(std::size_t off) const { return storage_[off]; }
  const double* grad(std::size_t off) const { return storage_.data() + off + 1; }

 private:
  const GameTemplate& game_;
  std::span<const double> x_;
  std::span<const double> b_;
  std::size_t n_;
  std::vector<double> masked_;
  std::unordered_map<std::uint32_t, std::size_t> index_;
  std::vector<double> storage_;
};

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// |h(mask(S+i)) - h(mask(S))|_1 and its b-gradient added into grad.
double feature_term(const MlpModel& model, std::span<const double> x, std::span<const double> b,
                    Coalition s, int i, double weight, std::span<double> grad) {
  const Coalition si = s.with(i);
  const std::vector<double> a_in = mask(x, si, b);
  const std::vector<double> c_in = mask(x, s, b);
  const std::vector<double> ha = model.forward(a_in).h;
  const std::vector<double> hc = model.forward(c_in).h;
  double total = 0.0;
  std::vector<double> cot(ha.size());
  for (std::size_t k = 0; k < ha.size(); ++k) {
    total += std::abs(ha[k] - hc[k]);
    cot[k] = sign(ha[k] - hc[k]);
  }
  const std::vector<double> ga = model.feature_vjp(a_in, cot);
  const std::vector<double> gc = model.feature_vjp(c_in, cot);
  for (std::size_t j = 0; j < grad.size(); ++j) {
    const int jj = static_cast<int>(j);
    const double da = si.contains(jj) ? 0.0 : ga[j];
    const double dc = s.contains(jj) ? 0.0 : gc[j];
    grad[j] += weight * (da - dc);
  }
  return total;
}

}  // namespace

LossResult evaluate_loss(const GameTemplate& game, const LearnConfig& config,
                         std::span<const double> b, std::uint64_t step) {
  validate(config);
  validate(game);
  const int n = game.players();
  if (b.size() != static_cast<std::size_t>(n)) throw DimensionError("baseline length differs from n");

  const MlpModel* feature_model = nullptr;
  if (config.feature_variant) {
    if (config.loss != LossKind::kMarginal) {
      throw ConfigError("the feature variant applies to the marginal loss only");
    }
    const auto* mlp = dynamic_cast<const MlpFunction*>(game.backend.get());
    if (mlp == nullptr) throw CapabilityError("feature variant needs an MLP backend");
    feature_model = &mlp->model();
  } else if (!game.backend->differentiable()) {
    throw CapabilityError("backend '" + game.backend->describe() + "' does not provide gradients");
  }

  const std::vector<Draw> draws = make_draws(config, n, step);
  const double outer = 1.0 / static_cast<double>(draws.size() * game.batch.size());
  LossResult out;
  out.grad.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> local(static_cast<std::size_t>(n));

  for (const auto& x : game.batch) {
    if (feature_model != nullptr) {
      for (const Draw& draw : draws) {
        for (int i = 0; i < n; ++i) {
          const auto& ctx = draw.contexts[static_cast<std::size_t>(i)];
          const double w = outer / static_cast<double>(ctx.size());
          for (Coalition s : ctx) out.loss += w * feature_term(*feature_model, x, b, s, i, w, out.grad);
        }
      }
      continue;
    }
    ScalarPoints points(game, x, b);
    for (const Draw& draw : draws) {
      for (int i = 0; i < n; ++i) {
        const auto& ctx = draw.contexts[static_cast<std::size_t>(i)];
        const double inv = 1.0 / static_cast<double>(ctx.size());
        if (config.loss == LossKind::kShapley) {
          double phi = 0.0;
          std::fill(local.begin(), local.end(), 0.0);
          for (Coalition s : ctx) {
            const std::size_t hi = points.at(s.with(i));
            const std::size_t lo = points.at(s);
            phi += points.value(hi) - points.value(lo);
            const double* gh = points.grad(hi);
            const double* gl = points.grad(lo);
            for (std::size_t j = 0; j < local.size(); ++j) local[j] += gh[j] - gl[j];
          }
          phi *= inv;
          out.loss += outer * std::abs(phi);
          const double w = outer * inv * sign(phi);
          if (w != 0.0) {
            for (std::size_t j = 0; j < local.size(); ++j) out.grad[j] += w * local[j];
          }
        } else {
          for (Coalition s : ctx) {
            const std::size_t hi = points.at(s.with(i));
            const std::size_t lo = points.at(s);
            const double delta = points.value(hi) - points.value(lo);
            out.loss += outer * inv * std::abs(delta);
            const double w = outer * inv * sign(delta);
            if (w == 0.0) continue;
            const double* gh = points.grad(hi);
            const double* gl = points.grad(lo);
            for (std::size_t j = 0; j < out.grad.size(); ++j) out.grad[j] += w * (gh[j] - gl[j]);
          }
        }
      }
    }
  }
  return out;
}

LossResult loss_shapley(const GameTemplate& game, LearnConfig config, std::span<const double> b,
                        std::uint64_t step) {
  config.loss = LossKind::kShapley;
  config.feature_variant = false;
  return evaluate_loss(game, config, b, step);
}

LossResult loss_marginal(const GameTemplate& game, LearnConfig config, std::span<const double> b,
                         std::uint64_t step) {
  config.loss = LossKind::kMarginal;
  return evaluate_loss(game, config, b, step);
}

LearnState learn(const LearnConfig& config, const GameTemplate& game) {
  validate(config);
  validate(game);
  std::vector<double> b = initial_baseline(config, game);
  LearnState state;
  state.b = BaselineVector(b, game.bounds);
  std::vector<double> ema_trace;
  int flat_steps = 0;

  for (int step = 0; step < config.steps; ++step) {
    LossResult r;
    try {
      r = evaluate_loss(game, config, b, static_cast<std::uint64_t>(step));
    } catch (const EvaluationError& e) {
      state.error = e.what();
      break;
    }
    // Norm of the projected gradient, so a coordinate pinned at its bound
    // by an outward gradient does not keep the run alive.
    double norm2 = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double next = game.bounds[j].clamp(b[j] - config.step_size * r.grad[j]);
      const double g = (b[j] - next) / config.step_size;
      norm2 += g * g;
      b[j] = next;
    }
    const double norm = std::sqrt(norm2);
    state.b.assign_projected(b);
    state.loss_trace.push_back(r.loss);
    state.grad_norm_trace.push_back(norm);
    state.steps = step + 1;
    ema_trace.push_back(ema_trace.empty() ? r.loss : (1.0 - config.ema_alpha) * ema_trace.back() + config.ema_alpha * r.loss);

    // A single step's draws can cancel exactly, so one tiny gradient is not
    // enough to stop.
    flat_steps = norm < config.grad_tolerance ? flat_steps + 1 : 0;
    if (state.steps < config.min_steps) continue;
    if (flat_steps >= config.grad_patience) {
      state.converged = true;
      break;
    }
    const auto w = static_cast<std::size_t>(config.ema_window);
    if (ema_trace.size() > w && ema_trace[ema_trace.size() - 1 - w] - ema_trace.back() < config.ema_tolerance) {
      state.converged = true;
      break;
    }
  }
  return state;
}

AccuracyCount accuracy_count(std::span<const double> b, std::span<const std::optional<double>> truth,
                             std::span<const Interval> domain) {
  if (b.size() != truth.size()) throw DimensionError("baseline and truth lengths differ");
  if (!domain.empty() && domain.size() != b.size()) throw DimensionError("domain length differs");
  AccuracyCount out;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!truth[i]) continue;
    double bi = b[i];
    double ti = *truth[i];
    if (!domain.empty()) {
      const double width = domain[i].hi - domain[i].lo;
      if (width > 0.0 && std::isfinite(width)) {
        bi = (bi - domain[i].lo) / width;
        ti = (ti - domain[i].lo) / width;
      }
    }
    ++out.annotated;
    if (std::abs(bi - ti) < 0.5) ++out.correct;
  }
  if (out.annotated == 0) throw ArgumentError("no annotated truth entries");
  return out;
}

double accuracy(std::span<const double> b, std::span<const std::optional<double>> truth,
                std::span<const Interval> domain) {
  return accuracy_count(b, truth, domain).ratio();
}

}  // namespace nosignal
