#include "nosignal/manifest.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "nosignal/errors.hpp"
#include "nosignal/expr.hpp"
#include "nosignal/mlp.hpp"
#include "nosignal/random.hpp"

namespace nosignal {

namespace fs = std::filesystem;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::vector<double> reals(const nlohmann::json& j, const char* what) {
  try {
    return j.get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(what) + " must be an array of numbers");
  }
}

}  // namespace

BackendSpec backend_from_json(const nlohmann::json& j, int n, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("backend must be an object");
  const std::string kind = j.value("kind", std::string("expr"));
  if (kind == "expr") {
    if (!j.contains("source") || !j["source"].is_string()) throw ConfigError("expr backend needs a \"source\" string");
    const std::string source = j["source"].get<std::string>();
    return {std::make_shared<ExprFunction>(ExprGraph::parse(source), n), {{"kind", "expr"}, {"source", source}}};
  }
  if (kind == "mlp") {
    if (!j.contains("weights")) throw ConfigError("mlp backend needs \"weights\"");
    const auto& w = j["weights"];
    MlpModel model = w.is_string() ? MlpModel::load(resolve(base_dir, w.get<std::string>()).string())
                                   : MlpModel::from_json(w);
    const int label = j.value("label", 0);
    if (model.input_size() != n) {
      throw DimensionError("weights expect " + std::to_string(model.input_size()) + " inputs, game has n = " +
                           std::to_string(n));
    }
    nlohmann::json echo = {{"kind", "mlp"}, {"weights", model.to_json()}, {"label", label}};
    return {std::make_shared<MlpFunction>(std::move(model), label), std::move(echo)};
  }
  throw ConfigError("unknown backend kind '" + kind + "'");
}

std::vector<Interval> bounds_from_json(const nlohmann::json& j, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  if (j.is_null()) return std::vector<Interval>(n, Interval{-inf, inf});
  if (j.is_string()) {
    if (j.get<std::string>() == "binary") return std::vector<Interval>(n, Interval{0.0, 1.0});
    throw ConfigError("bounds must be \"binary\" or a list of [lo, hi]");
  }
  std::vector<Interval> out;
  try {
    for (const auto& iv : j) out.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bounds must be a list of [lo, hi] pairs");
  }
  if (out.size() != n) throw ConfigError("bounds length differs from n");
  for (const auto& iv : out) {
    if (iv.lo > iv.hi) throw ConfigError("bound with lo > hi");
  }
  return out;
}

namespace {

int read_n(const nlohmann::json& j) {
  if (!j.contains("n") || !j["n"].is_number_integer()) throw ConfigError("game needs an integer \"n\"");
  const int n = j["n"].get<int>();
  if (n < 1 || n > kMaxPlayers) throw CapacityError("n = " + std::to_string(n) + " outside [1, 25]");
  return n;
}

BackendSpec read_backend(const nlohmann::json& j, int n, const fs::path& base_dir) {
  if (j.contains("backend")) return backend_from_json(j["backend"], n, base_dir);
  if (j.contains("expr")) return backend_from_json({{"kind", "expr"}, {"source", j["expr"]}}, n, base_dir);
  throw ConfigError("game needs \"backend\" or \"expr\"");
}

}  // namespace

GameSpec game_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("game file must hold a JSON object");
  const int n = read_n(j);
  BackendSpec backend = read_backend(j, n, base_dir);
  if (!j.contains("x")) throw ConfigError("game needs \"x\"");
  std::vector<double> x = reals(j["x"], "x");
  std::vector<double> b = j.contains("baseline") ? reals(j["baseline"], "baseline")
                                                 : std::vector<double>(static_cast<std::size_t>(n), 0.0);
  if (x.size() != static_cast<std::size_t>(n) || b.size() != static_cast<std::size_t>(n)) {
    throw DimensionError("x and baseline must have length n = " + std::to_string(n));
  }
  const auto bounds = bounds_from_json(j.contains("bounds") ? j["bounds"] : nlohmann::json(), x.size());
  const Transform t = parse_transform(j.value("transform", std::string("identity")));
  GameSpec game(backend.function, std::move(x), BaselineVector(std::move(b), bounds), t);
  game.enable_memo();
  return game;
}

GameSpec load_game(const std::string& path) {
  return game_from_json(read_json_file(path), fs::path(path).parent_path());
}

namespace {

nlohmann::json describe_backend(const ValueFunction& f) {
  if (const auto* e = dynamic_cast<const ExprFunction*>(&f)) {
    return {{"kind", "expr"}, {"source", e->graph().source()}};
  }
  if (const auto* m = dynamic_cast<const MlpFunction*>(&f)) {
    return {{"kind", "mlp"}, {"weights", m->model().to_json()}, {"label", m->label()}};
  }
  return {{"kind", f.describe()}};
}

nlohmann::json bounds_json(const std::vector<Interval>& bounds) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& iv : bounds) {
    // JSON has no infinity; unbounded ends are written as null.
    nlohmann::json lo = std::isfinite(iv.lo) ? nlohmann::json(iv.lo) : nlohmann::json();
    nlohmann::json hi = std::isfinite(iv.hi) ? nlohmann::json(iv.hi) : nlohmann::json();
    out.push_back({lo, hi});
  }
  return out;
}

}  // namespace

nlohmann::json game_to_json(const GameSpec& game) {
  return {{"n", game.players()},
          {"backend", describe_backend(game.backend())},
          {"x", game.x()},
          {"baseline", game.baseline().values()},
          {"bounds", bounds_json(game.baseline().bounds())},
          {"transform", transform_name(game.transform())}};
}

LearnConfig learn_config_from_json(const nlohmann::json& j, LearnConfig c) {
  try {
    if (j.contains("loss")) c.loss = parse_loss(j["loss"].get<std::string>());
    if (j.contains("lambda_frac")) c.lambda_frac = j["lambda_frac"].get<double>();
    if (j.contains("steps")) c.steps = j["steps"].get<int>();
    if (j.contains("step_size")) c.step_size = j["step_size"].get<double>();
    if (j.contains("orders_per_step")) c.orders_per_step = j["orders_per_step"].get<int>();
    if (j.contains("contexts_per_order")) c.contexts_per_order = j["contexts_per_order"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("feature_variant")) c.feature_variant = j["feature_variant"].get<bool>();
    if (j.contains("fixed_order")) c.fixed_order = j["fixed_order"].get<int>();
    if (j.contains("grad_tolerance")) c.grad_tolerance = j["grad_tolerance"].get<double>();
    if (j.contains("grad_patience")) c.grad_patience = j["grad_patience"].get<int>();
    if (j.contains("ema_tolerance")) c.ema_tolerance = j["ema_tolerance"].get<double>();
    if (j.contains("ema_window")) c.ema_window = j["ema_window"].get<int>();
    if (j.contains("ema_alpha")) c.ema_alpha = j["ema_alpha"].get<double>();
    if (j.contains("min_steps")) c.min_steps = j["min_steps"].get<int>();
    if (j.contains("init")) {
      const auto& init = j["init"];
      if (init.is_string()) {
        const std::string s = init.get<std::string>();
        if (s == "zero") {
          c.init = {InitKind::kZero, {}};
        } else if (s == "mean") {
          c.init = {InitKind::kMean, {}};
        } else {
          throw ConfigError("init must be \"zero\", \"mean\" or an array");
        }
      } else {
        c.init = {InitKind::kExplicit, reals(init, "init")};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad learn config field: ") + e.what());
  }
  validate(c);
  return c;
}

nlohmann::json learn_config_to_json(const LearnConfig& c) {
  nlohmann::json j = {{"loss", loss_name(c.loss)},
                      {"lambda_frac", c.lambda_frac},
                      {"steps", c.steps},
                      {"step_size", c.step_size},
                      {"orders_per_step", c.orders_per_step},
                      {"contexts_per_order", c.contexts_per_order},
                      {"seed", c.seed},
                      {"feature_variant", c.feature_variant},
                      {"grad_tolerance", c.grad_tolerance},
                      {"grad_patience", c.grad_patience},
                      {"ema_tolerance", c.ema_tolerance},
                      {"ema_window", c.ema_window},
                      {"ema_alpha", c.ema_alpha},
                      {"min_steps", c.min_steps}};
  switch (c.init.kind) {
    case InitKind::kZero: j["init"] = "zero"; break;
    case InitKind::kMean: j["init"] = "mean"; break;
    case InitKind::kExplicit: j["init"] = c.init.values; break;
  }
  if (c.fixed_order) j["fixed_order"] = *c.fixed_order;
  return j;
}

LearnJob learn_job_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("learn config must be a JSON object");
  if (!j.contains("game")) throw ConfigError("learn config needs \"game\"");
  const auto& gj = j["game"];
  if (!gj.is_object()) throw ConfigError("\"game\" must be an object");
  const int n = read_n(gj);

  LearnJob job;
  job.config = learn_config_from_json(j);
  BackendSpec backend = read_backend(gj, n, base_dir);
  job.game.backend = backend.function;
  job.game.transform = parse_transform(gj.value("transform", std::string("identity")));
  job.game.bounds = bounds_from_json(gj.contains("bounds") ? gj["bounds"] : nlohmann::json("binary"),
                                     static_cast<std::size_t>(n));

  if (!j.contains("batch")) throw ConfigError("learn config needs \"batch\"");
  const auto& batch = j["batch"];
  nlohmann::json batch_echo = batch;
  if (batch.is_array()) {
    for (const auto& row : batch) job.game.batch.push_back(reals(row, "batch row"));
  } else if (batch.is_object() && batch.contains("corners")) {
    const auto count = batch["corners"].get<std::size_t>();
    Rng rng(batch.value("seed", std::uint64_t{0}));
    for (std::size_t k = 0; k < count; ++k) {
      std::vector<double> row(static_cast<std::size_t>(n));
      for (std::size_t i = 0; i < row.size(); ++i) {
        const Interval& iv = job.game.bounds[i];
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) throw ConfigError("corner batches need finite bounds");
        row[i] = uniform_below(rng, 2) ? iv.hi : iv.lo;
      }
      job.game.batch.push_back(std::move(row));
    }
  } else if (batch.is_object() && batch.contains("dataset")) {
    const fs::path path = resolve(base_dir, batch["dataset"].get<std::string>());
    const Dataset data = load_dataset_csv(path.string());
    if (data.features() != n) throw DimensionError("dataset width differs from n");
    const std::size_t rows = std::min(data.size(), batch.value("rows", data.size()));
    job.game.batch.assign(data.rows.begin(), data.rows.begin() + static_cast<std::ptrdiff_t>(rows));
    job.game.feature_means = data.feature_means;
  } else {
    throw ConfigError("batch must be an array of rows, {\"corners\": K} or {\"dataset\": path}");
  }
  validate(job.game);

  if (j.contains("truth")) {
    for (const auto& t : j["truth"]) {
      if (t.is_null()) {
        job.truth.emplace_back(std::nullopt);
      } else if (t.is_number()) {
        job.truth.emplace_back(t.get<double>());
      } else {
        throw ConfigError("truth entries must be numbers or null");
      }
    }
    if (job.truth.size() != static_cast<std::size_t>(n)) throw ConfigError("truth length differs from n");
  }

  nlohmann::json game_echo = {{"n", n},
                              {"backend", backend.echo},
                              {"bounds", bounds_json(job.game.bounds)},
                              {"transform", transform_name(job.game.transform)}};
  job.echo = learn_config_to_json(job.config);
  job.echo["game"] = std::move(game_echo);
  job.echo["batch"] = std::move(batch_echo);
  if (j.contains("truth")) job.echo["truth"] = j["truth"];
  return job;
}

LearnJob load_learn_job(const std::string& path) {
  return learn_job_from_json(read_json_file(path), fs::path(path).parent_path());
}

}  // namespace nosignal
