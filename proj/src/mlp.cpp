#include "nosignal/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "nosignal/errors.hpp"
#include "nosignal/format.hpp"
#include "nosignal/random.hpp"

namespace nosignal {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kSigmoid:
      return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    case Activation::kIdentity:
      break;
  }
  return z;
}

// Derivative in terms of the pre-activation z and output y.
double activate_derivative(Activation a, double z, double y) {
  switch (a) {
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::kSigmoid:
      return y * (1.0 - y);
    case Activation::kIdentity:
      break;
  }
  return 1.0;
}

std::vector<double> softmax(std::span<const double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double total = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    p[k] = std::exp(z[k] - top);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

}  // namespace

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kIdentity: return "identity";
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + name + "'");
}

MlpModel::MlpModel(std::vector<DenseLayer> layers, int hidden_tap)
    : layers_(std::move(layers)), hidden_tap_(hidden_tap) {
  if (layers_.size() < 2) throw ArgumentError("an MLP needs at least 2 layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.in < 1 || layer.out < 1) throw DimensionError("layer with empty dimension");
    if (layer.weights.size() != static_cast<std::size_t>(layer.in) * static_cast<std::size_t>(layer.out) ||
        layer.bias.size() != static_cast<std::size_t>(layer.out)) {
      throw DimensionError("layer " + std::to_string(l) + " weight/bias shape mismatch");
    }
    if (l > 0 && layers_[l - 1].out != layer.in) {
      throw DimensionError("layer " + std::to_string(l) + " expects " + std::to_string(layer.in) +
                           " inputs but previous layer emits " + std::to_string(layers_[l - 1].out));
    }
  }
  if (hidden_tap_ < 0 || hidden_tap_ >= static_cast<int>(layers_.size()) - 1) {
    throw ArgumentError("hidden_tap must name an inner layer");
  }
}

MlpModel::Trace MlpModel::run(std::span<const double> input) const {
  if (input.size() != static_cast<std::size_t>(input_size())) {
    throw DimensionError("MLP expects " + std::to_string(input_size()) + " inputs, got " +
                         std::to_string(input.size()));
  }
  Trace t;
  t.pre.resize(layers_.size());
  t.post.resize(layers_.size());
  std::span<const double> a = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    auto& z = t.pre[l];
    auto& y = t.post[l];
    z.assign(static_cast<std::size_t>(layer.out), 0.0);
    y.resize(z.size());
    for (int r = 0; r < layer.out; ++r) {
      double acc = layer.bias[static_cast<std::size_t>(r)];
      const double* row = layer.weights.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(layer.in);
      for (int c = 0; c < layer.in; ++c) acc += row[c] * a[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = acc;
      y[static_cast<std::size_t>(r)] = activate(layer.activation, acc);
    }
    a = y;
  }
  return t;
}

std::vector<double> MlpModel::backprop(const Trace& trace, int from_layer,
                                       std::vector<double> cotangent) const {
  std::vector<double> delta = std::move(cotangent);
  for (int l = from_layer; l >= 0; --l) {
    const DenseLayer& layer = layers_[static_cast<std::size_t>(l)];
    const auto& z = trace.pre[static_cast<std::size_t>(l)];
    const auto& y = trace.post[static_cast<std::size_t>(l)];
    for (std::size_t r = 0; r < delta.size(); ++r) delta[r] *= activate_derivative(layer.activation, z[r], y[r]);
    std::vector<double> below(static_cast<std::size_t>(layer.in), 0.0);
    for (int r = 0; r < layer.out; ++r) {
      const double d = delta[static_cast<std::size_t>(r)];
      if (d == 0.0) continue;
      const double* row = layer.weights.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(layer.in);
      for (int c = 0; c < layer.in; ++c) below[static_cast<std::size_t>(c)] += row[c] * d;
    }
    delta = std::move(below);
  }
  return delta;
}

ForwardResult MlpModel::forward(std::span<const double> input) const {
  Trace t = run(input);
  return {std::move(t.post.back()), std::move(t.post[static_cast<std::size_t>(hidden_tap_)])};
}

std::vector<double> MlpModel::input_gradient(std::span<const double> input,
                                             const GradientTarget& target) const {
  const Trace t = run(input);
  const int last = static_cast<int>(layers_.size()) - 1;
  const auto& logits = t.post.back();
  return std::visit(
      [&](const auto& tgt) -> std::vector<double> {
        using T = std::decay_t<decltype(tgt)>;
        if constexpr (std::is_same_v<T, LogitTarget>) {
          if (tgt.index < 0 || tgt.index >= classes()) throw DimensionError("logit index out of range");
          std::vector<double> cot(logits.size(), 0.0);
          cot[static_cast<std::size_t>(tgt.index)] = 1.0;
          return backprop(t, last, std::move(cot));
        } else if constexpr (std::is_same_v<T, LogOddsTarget>) {
          if (tgt.label < 0 || tgt.label >= classes()) throw DimensionError("label out of range");
          if (classes() < 2) throw ArgumentError("log-odds needs at least two classes");
          // log p/(1-p) = z_label - logsumexp_{j != label} z_j
          std::vector<double> rest;
          for (int k = 0; k < classes(); ++k) {
            if (k != tgt.label) rest.push_back(logits[static_cast<std::size_t>(k)]);
          }
          const std::vector<double> q = softmax(rest);
          std::vector<double> cot(logits.size(), 0.0);
          std::size_t r = 0;
          for (int k = 0; k < classes(); ++k) {
            cot[static_cast<std::size_t>(k)] = k == tgt.label ? 1.0 : -q[r++];
          }
          return backprop(t, last, std::move(cot));
        } else {
          const auto& h = t.post[static_cast<std::size_t>(hidden_tap_)];
          if (tgt.reference.size() != h.size()) throw DimensionError("reference feature length mismatch");
          std::vector<double> cot(h.size(), 0.0);
          for (std::size_t k = 0; k < h.size(); ++k) {
            const double d = h[k] - tgt.reference[k];
            cot[k] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
          }
          return backprop(t, hidden_tap_, std::move(cot));
        }
      },
      target);
}

std::vector<double> MlpModel::feature_vjp(std::span<const double> input,
                                          std::span<const double> cotangent) const {
  const Trace t = run(input);
  if (cotangent.size() != static_cast<std::size_t>(feature_size())) {
    throw DimensionError("feature cotangent length mismatch");
  }
  return backprop(t, hidden_tap_, std::vector<double>(cotangent.begin(), cotangent.end()));
}

double MlpModel::class_probability(std::span<const double> input, int label,
                                   std::span<double> grad) const {
  if (label < 0 || label >= classes()) throw DimensionError("label out of range");
  const Trace t = run(input);
  const std::vector<double> p = softmax(t.post.back());
  const double pl = p[static_cast<std::size_t>(label)];
  if (!grad.empty()) {
    if (grad.size() < static_cast<std::size_t>(input_size())) throw DimensionError("gradient buffer too short");
    std::vector<double> cot(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      cot[k] = pl * ((static_cast<int>(k) == label ? 1.0 : 0.0) - p[k]);
    }
    const std::vector<double> g = backprop(t, static_cast<int>(layers_.size()) - 1, std::move(cot));
    std::copy(g.begin(), g.end(), grad.begin());
  }
  return pl;
}

nlohmann::json MlpModel::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const DenseLayer& layer : layers_) {
    nlohmann::json w = nlohmann::json::array();
    for (int r = 0; r < layer.out; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < layer.in; ++c) row.push_back(layer.w(r, c));
      w.push_back(std::move(row));
    }
    layers.push_back({{"w", std::move(w)}, {"b", layer.bias}, {"act", activation_name(layer.activation)}});
  }
  return {{"layers", std::move(layers)}, {"hidden_tap", hidden_tap_}};
}

MlpModel MlpModel::from_json(const nlohmann::json& j) {
  try {
    std::vector<DenseLayer> layers;
    for (const auto& jl : j.at("layers")) {
      DenseLayer layer;
      const auto& w = jl.at("w");
      layer.out = static_cast<int>(w.size());
      layer.in = layer.out > 0 ? static_cast<int>(w.at(0).size()) : 0;
      for (const auto& row : w) {
        if (static_cast<int>(row.size()) != layer.in) throw DimensionError("ragged weight matrix");
        for (const auto& v : row) layer.weights.push_back(v.get<double>());
      }
      layer.bias = jl.at("b").get<std::vector<double>>();
      layer.activation = parse_activation(jl.value("act", std::string("identity")));
      layers.push_back(std::move(layer));
    }
    const int tap = j.contains("hidden_tap") ? j.at("hidden_tap").get<int>()
                                               : static_cast<int>(layers.size()) - 2;
    return MlpModel(std::move(layers), tap);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed weights JSON: ") + e.what());
  }
}

MlpModel MlpModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open weights file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("weights file '" + path + "': " + e.what());
  }
  return from_json(j);
}

void MlpModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write weights file '" + path + "'");
  out << to_json().dump() << '\n';
}

Dataset make_dataset(std::vector<std::vector<double>> rows, std::vector<int> labels,
                     std::vector<std::string> columns) {
  if (rows.size() != labels.size()) throw DimensionError("row/label count mismatch");
  Dataset d;
  d.rows = std::move(rows);
  d.labels = std::move(labels);
  d.columns = std::move(columns);
  const std::size_t dim = d.rows.empty() ? 0 : d.rows.front().size();
  d.feature_means.assign(dim, 0.0);
  for (const auto& r : d.rows) {
    if (r.size() != dim) throw DimensionError("ragged dataset rows");
  }
  for (std::size_t c = 0; c < dim; ++c) {
    double total = 0.0;
    double carry = 0.0;
    for (const auto& r : d.rows) {
      const double y = r[c] - carry;
      const double t = total + y;
      carry = (t - total) - y;
      total = t;
    }
    d.feature_means[c] = total / static_cast<double>(d.rows.size());
  }
  int classes = 0;
  for (int label : d.labels) {
    if (label < 0) throw ArgumentError("negative class label");
    classes = std::max(classes, label + 1);
  }
  d.classes = classes;
  return d;
}

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset '" + path + "' is empty");
  std::vector<std::string> columns;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) columns.push_back(cell);
  }
  if (columns.size() < 2) throw ConfigError("dataset needs at least one feature and a label");
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ConfigError("dataset line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (values.size() != columns.size()) {
      throw ConfigError("dataset line " + std::to_string(line_no) + " has " +
                        std::to_string(values.size()) + " cells, header has " +
                        std::to_string(columns.size()));
    }
    const double label = values.back();
    if (label != std::floor(label) || label < 0) {
      throw ConfigError("dataset line " + std::to_string(line_no) + ": label must be a non-negative integer");
    }
    labels.push_back(static_cast<int>(label));
    values.pop_back();
    rows.push_back(std::move(values));
  }
  columns.pop_back();
  return make_dataset(std::move(rows), std::move(labels), std::move(columns));
}

void save_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset '" + path + "'");
  for (int c = 0; c < data.features(); ++c) {
    out << (static_cast<std::size_t>(c) < data.columns.size() ? data.columns[static_cast<std::size_t>(c)]
                                                               : "f" + std::to_string(c + 1))
        << ',';
  }
  out << "label\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << join_reals(data.rows[r]) << ',' << data.labels[r] << '\n';
  }
}

Dataset make_blobs(std::size_t per_class, int dim, int classes, double spread, std::uint64_t seed) {
  if (dim < 1 || classes < 2) throw ArgumentError("blobs need dim >= 1 and classes >= 2");
  Rng rng(seed);
  std::vector<std::vector<double>> centers(static_cast<std::size_t>(classes));
  for (auto& c : centers) {
    c.resize(static_cast<std::size_t>(dim));
    for (double& v : c) v = 0.2 + 0.6 * uniform_unit(rng);
  }
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t k = 0; k < per_class; ++k) {
    for (int cls = 0; cls < classes; ++cls) {
      std::vector<double> row(static_cast<std::size_t>(dim));
      for (int j = 0; j < dim; ++j) {
        // Box-Muller from two uniform draws.
        const double u1 = std::max(uniform_unit(rng), 1e-300);
        const double u2 = uniform_unit(rng);
        const double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
        row[static_cast<std::size_t>(j)] =
            std::clamp(centers[static_cast<std::size_t>(cls)][static_cast<std::size_t>(j)] + spread * g, 0.0, 1.0);
      }
      rows.push_back(std::move(row));
      labels.push_back(cls);
    }
  }
  return make_dataset(std::move(rows), std::move(labels));
}

Architecture parse_architecture(const std::string& text) {
  Architecture arch;
  std::string widths = text;
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    widths = text.substr(0, colon);
    arch.hidden_activation = parse_activation(text.substr(colon + 1));
  }
  std::stringstream ss(widths);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      const int w = std::stoi(cell);
      if (w < 1) throw ConfigError("hidden width must be >= 1");
      arch.hidden.push_back(w);
    } catch (const std::logic_error&) {
      throw ConfigError("bad architecture '" + text + "' (expected e.g. 16,8 or 16:relu)");
    }
  }
  if (arch.hidden.empty()) throw ConfigError("architecture needs at least one hidden layer");
  return arch;
}

namespace {

DenseLayer init_layer(int in, int out, Activation act, Rng& rng) {
  DenseLayer layer;
  layer.in = in;
  layer.out = out;
  layer.activation = act;
  const double limit = 1.0 / std::sqrt(static_cast<double>(in));
  layer.weights.resize(static_cast<std::size_t>(in) * static_cast<std::size_t>(out));
  for (double& w : layer.weights) w = (2.0 * uniform_unit(rng) - 1.0) * limit;
  layer.bias.assign(static_cast<std::size_t>(out), 0.0);
  return layer;
}

}  // namespace

TrainResult train(const Dataset& data, const Architecture& arch, const TrainOptions& options) {
  if (data.size() == 0) throw ArgumentError("cannot train on an empty dataset");
  if (arch.hidden.empty()) throw ConfigError("architecture needs at least one hidden layer");
  if (options.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (options.batch_size < 1) throw ConfigError("batch size must be >= 1");
  const int classes = std::max(data.classes, 2);

  Rng rng(options.seed);
  std::vector<DenseLayer> layers;
  int width = data.features();
  for (int h : arch.hidden) {
    layers.push_back(init_layer(width, h, arch.hidden_activation, rng));
    width = h;
  }
  layers.push_back(init_layer(width, classes, Activation::kIdentity, rng));
  MlpModel model(std::move(layers), static_cast<int>(arch.hidden.size()) - 1);

  TrainResult result{model, {}};
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      auto& L = result.model.mutable_layers();
      std::vector<std::vector<double>> gw(L.size());
      std::vector<std::vector<double>> gb(L.size());
      for (std::size_t l = 0; l < L.size(); ++l) {
        gw[l].assign(L[l].weights.size(), 0.0);
        gb[l].assign(L[l].bias.size(), 0.0);
      }
      for (std::size_t k = start; k < stop; ++k) {
        const auto& x = data.rows[order[k]];
        const int y = data.labels[order[k]];
        // Forward with stored activations.
        std::vector<std::vector<double>> pre(L.size());
        std::vector<std::vector<double>> post(L.size());
        std::span<const double> a = x;
        for (std::size_t l = 0; l < L.size(); ++l) {
          pre[l].assign(static_cast<std::size_t>(L[l].out), 0.0);
          post[l].resize(pre[l].size());
          for (int r = 0; r < L[l].out; ++r) {
            double acc = L[l].bias[static_cast<std::size_t>(r)];
            for (int c = 0; c < L[l].in; ++c) acc += L[l].w(r, c) * a[static_cast<std::size_t>(c)];
            pre[l][static_cast<std::size_t>(r)] = acc;
            post[l][static_cast<std::size_t>(r)] = activate(L[l].activation, acc);
          }
          a = post[l];
        }
        const std::vector<double> p = softmax(post.back());
        epoch_loss += -std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300));
        std::vector<double> delta(p);
        delta[static_cast<std::size_t>(y)] -= 1.0;
        for (std::size_t l = L.size(); l-- > 0;) {
          for (std::size_t r = 0; r < delta.size(); ++r) {
            delta[r] *= activate_derivative(L[l].activation, pre[l][r], post[l][r]);
          }
          const std::span<const double> in = l == 0 ? std::span<const double>(x) : std::span<const double>(post[l - 1]);
          std::vector<double> below(static_cast<std::size_t>(L[l].in), 0.0);
          for (int r = 0; r < L[l].out; ++r) {
            const double d = delta[static_cast<std::size_t>(r)];
            gb[l][static_cast<std::size_t>(r)] += d;
            for (int c = 0; c < L[l].in; ++c) {
              gw[l][static_cast<std::size_t>(r) * static_cast<std::size_t>(L[l].in) + static_cast<std::size_t>(c)] +=
                  d * in[static_cast<std::size_t>(c)];
              below[static_cast<std::size_t>(c)] += L[l].w(r, c) * d;
            }
          }
          delta = std::move(below);
        }
      }
      const double scale = options.learning_rate / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < L.size(); ++l) {
        for (std::size_t k = 0; k < L[l].weights.size(); ++k) L[l].weights[k] -= scale * gw[l][k];
        for (std::size_t k = 0; k < L[l].bias.size(); ++k) L[l].bias[k] -= scale * gb[l][k];
      }
    }
    epoch_loss /= static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1));
    }
    result.loss_trace.push_back(epoch_loss);
  }
  return result;
}

double training_accuracy(const MlpModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto logits = model.forward(data.rows[r]).logits;
    const auto best = std::max_element(logits.begin(), logits.end()) - logits.begin();
    if (best == data.labels[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

MlpFunction::MlpFunction(MlpModel model, int label) : model_(std::move(model)), label_(label) {
  if (label_ < 0 || label_ >= model_.classes()) {
    throw ConfigError("label " + std::to_string(label_) + " outside [0, " +
                      std::to_string(model_.classes()) + ")");
  }
}

}  // namespace nosignal
