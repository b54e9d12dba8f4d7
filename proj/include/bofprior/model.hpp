#pragma once

#include <bofprior/basis.hpp>
#include <bofprior/dataset.hpp>
#include <bofprior/error.hpp>
#include <bofprior/priors.hpp>
#include <bofprior/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bofprior {

enum class StageKind { seasonal, trend, event };

inline std::string_view to_string(StageKind k) {
  switch (k) {
    case StageKind::seasonal: return "seasonal";
    case StageKind::trend: return "trend";
    case StageKind::event: return "event";
  }
  return "";
}

inline StageKind stage_kind_from_string(std::string_view s) {
  if (s == "seasonal") return StageKind::seasonal;
  if (s == "trend") return StageKind::trend;
  if (s == "event") return StageKind::event;
  throw FormatError("unknown stage kind '" + std::string(s) + "'");
}

/// The four initialization strategies compared in the experiments.
enum class Variant { bof, hbof, ibof, itbof };

inline constexpr std::array<Variant, 4> kAllVariants{Variant::bof, Variant::hbof, Variant::ibof, Variant::itbof};

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::bof: return "bof";
    case Variant::hbof: return "h-bof";
    case Variant::ibof: return "i-bof";
    case Variant::itbof: return "it-bof";
  }
  return "";
}

inline std::string_view display_name(Variant v) {
  switch (v) {
    case Variant::bof: return "BoF";
    case Variant::hbof: return "H-BoF";
    case Variant::ibof: return "I-BoF";
    case Variant::itbof: return "IT-BoF";
  }
  return "";
}

inline Variant variant_from_string(std::string_view s) {
  for (auto v : kAllVariants)
    if (to_string(v) == s || display_name(v) == s) return v;
  throw ArgumentError("unknown variant '" + std::string(s) + "' (expected bof, h-bof, i-bof or it-bof)");
}

inline bool needs_config(Variant v) { return v == Variant::ibof || v == Variant::itbof; }

/// What an encoder output means, for bias initialization.
enum class Role { amplitude, frequency, phase, bias, slope, event_amplitude, event_width, event_center, other };

inline Role role_of(Family f, std::size_t p) {
  switch (f) {
    case Family::sine:
    case Family::cosine:
    case Family::sinc: return p == 0 ? Role::amplitude : p == 1 ? Role::frequency : Role::phase;
    case Family::constant: return Role::bias;
    case Family::linear: return Role::slope;
    case Family::gaussian: return p == 0 ? Role::event_amplitude : p == 1 ? Role::event_width : Role::event_center;
    default: return Role::other;
  }
}

/// Encoder outputs passed through softplus before reaching the basis, so
/// shifts and widths stay in their valid range.
inline bool softplus_param(Family f, std::size_t p) {
  return p == 1 && (f == Family::power || f == Family::log || f == Family::gaussian);
}

struct BasisSlot {
  Family family;
  std::size_t multiplicity = 1;
};

struct StageSpec {
  StageKind kind = StageKind::seasonal;
  std::vector<BasisSlot> bases;
  std::vector<std::size_t> input_indices;  // empty: the full residual

  std::size_t output_width() const {
    std::size_t w = 0;
    for (const auto& b : bases) w += param_count(b.family) * b.multiplicity;
    return w;
  }
  bool subsampled() const { return !input_indices.empty(); }
};

/// Bias distributions used when no data statistics exist for a role.
struct RoleTable {
  struct Dist {
    double mean = 0.0;
    double stddev = 1.0;
  };
  Dist amplitude{1.0, 0.5};
  Dist frequency{2.0 * std::numbers::pi * 5.0, 2.0 * std::numbers::pi};  // angular, rad per window
  Dist phase{0.0, 1.0};
  Dist slope{0.0, 1.0};
  Dist bias{0.0, 1.0};
  Dist event_amplitude{0.0, 0.5};
  Dist event_width{50.0, 25.0};
  Dist event_center{0.5, 0.2};

  Dist get(Role r) const {
    switch (r) {
      case Role::amplitude: return amplitude;
      case Role::frequency: return frequency;
      case Role::phase: return phase;
      case Role::bias: return bias;
      case Role::slope: return slope;
      case Role::event_amplitude: return event_amplitude;
      case Role::event_width: return event_width;
      case Role::event_center: return event_center;
      case Role::other: break;
    }
    throw ConfigError("no initialization prior for this encoder output");
  }
};

inline nlohmann::json to_json(const RoleTable& t) {
  auto d = [](const RoleTable::Dist& x) { return nlohmann::json{{"mean", x.mean}, {"stddev", x.stddev}}; };
  return {{"amplitude", d(t.amplitude)},       {"frequency", d(t.frequency)},
          {"phase", d(t.phase)},               {"slope", d(t.slope)},
          {"bias", d(t.bias)},                 {"event_amplitude", d(t.event_amplitude)},
          {"event_width", d(t.event_width)},   {"event_center", d(t.event_center)}};
}

/// Reads a role table; roles absent from the document keep their defaults.
inline RoleTable role_table_from_json(const nlohmann::json& j, std::vector<std::string>* warnings = nullptr) {
  RoleTable t;
  if (!j.is_object()) throw FormatError("role table must be a JSON object");
  auto read = [&](const char* key, RoleTable::Dist& d) {
    auto it = j.find(key);
    if (it == j.end()) return;
    d.mean = detail::get<double>(*it, "mean", key);
    d.stddev = detail::get<double>(*it, "stddev", key);
    if (!(d.stddev >= 0.0)) throw FormatError(std::string("field '") + key + ".stddev' must be >= 0");
  };
  read("amplitude", t.amplitude);
  read("frequency", t.frequency);
  read("phase", t.phase);
  read("slope", t.slope);
  read("bias", t.bias);
  read("event_amplitude", t.event_amplitude);
  read("event_width", t.event_width);
  read("event_center", t.event_center);
  detail::unknown_keys(j,
                       {"amplitude", "frequency", "phase", "slope", "bias", "event_amplitude", "event_width",
                        "event_center"},
                       "", warnings);
  return t;
}

struct LayerLayout {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t w_offset = 0;  // out x in, row-major
  std::size_t b_offset = 0;
};

struct StageCache {
  std::vector<double> input;
  std::vector<std::vector<double>> acts;  // per layer output; hidden ones after ReLU
  std::vector<double> z;                  // basis parameters after re-parameterization
  std::vector<double> jac;                // output_width x T
};

struct ForwardCache {
  std::vector<StageCache> stages;
  bool valid = false;
};

struct Reconstruction {
  std::vector<double> x_hat;
  std::vector<std::vector<double>> components;  // per stage
  std::vector<std::vector<double>> latents;     // per stage basis parameters
  std::vector<double> residual;                 // input minus every component
};

/// Stacked residual Bag-of-Functions network.
///
/// All weights live in one flat vector; stage s, layer l occupies
/// [w_offset, w_offset + out*in) for weights then `out` biases.
class BofModel {
public:
  BofModel() = default;

  BofModel(TimeGrid grid, std::vector<StageSpec> stages, std::vector<std::size_t> hidden = {64, 64},
           Variant variant = Variant::bof)
      : grid_(std::move(grid)), specs_(std::move(stages)), hidden_(std::move(hidden)), variant_(variant) {
    if (specs_.empty()) throw ConfigError("model needs at least one stage");
    const std::size_t T = grid_.size();
    std::size_t offset = 0;
    for (const auto& s : specs_) {
      if (s.bases.empty()) throw ConfigError("stage without basis functions");
      for (const auto& b : s.bases)
        if (b.multiplicity < 1) throw ConfigError("basis multiplicity must be >= 1");
      if (s.subsampled() && s.kind != StageKind::trend) throw ConfigError("only trend stages take subsampled input");
      for (std::size_t j = 0; j < s.input_indices.size(); ++j) {
        if (s.input_indices[j] >= T) throw ConfigError("trend input index beyond the grid");
        if (j > 0 && s.input_indices[j] <= s.input_indices[j - 1])
          throw ConfigError("trend input indices must be strictly increasing");
      }
      std::vector<std::size_t> widths{s.subsampled() ? s.input_indices.size() : T};
      widths.insert(widths.end(), hidden_.begin(), hidden_.end());
      widths.push_back(s.output_width());
      std::vector<LayerLayout> layers;
      for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        if (widths[l + 1] == 0) throw ConfigError("zero-width layer");
        LayerLayout L{widths[l], widths[l + 1], offset, offset + widths[l] * widths[l + 1]};
        offset = L.b_offset + L.out;
        layers.push_back(L);
      }
      layers_.push_back(std::move(layers));
    }
    theta_.assign(offset, 0.0);
  }

  const TimeGrid& grid() const { return grid_; }
  const std::vector<StageSpec>& stages() const { return specs_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }
  const std::vector<LayerLayout>& layers(std::size_t stage) const { return layers_.at(stage); }
  Variant variant() const { return variant_; }
  void set_variant(Variant v) { variant_ = v; }

  std::size_t param_count() const { return theta_.size(); }
  std::vector<double>& parameters() { return theta_; }
  const std::vector<double>& parameters() const { return theta_; }
  void set_parameters(std::vector<double> p) {
    if (p.size() != theta_.size()) throw ArgumentError("parameter vector has the wrong length");
    theta_ = std::move(p);
  }

  std::size_t input_width(std::size_t stage) const { return layers_.at(stage).front().in; }

  Reconstruction forward(std::span<const double> x, ForwardCache* cache = nullptr) const {
    const std::size_t T = grid_.size();
    if (x.size() != T)
      throw ArgumentError("input has " + std::to_string(x.size()) + " samples, model expects " + std::to_string(T));
    const auto t = grid_.positions();
    const EvalOptions opt{true, kTrainingStepSharpness};
    Reconstruction rec;
    rec.x_hat.assign(T, 0.0);
    rec.residual.assign(x.begin(), x.end());
    if (cache) {
      cache->stages.assign(specs_.size(), {});
      cache->valid = false;
    }
    StageCache local;
    std::array<double, 3> g{};
    for (std::size_t s = 0; s < specs_.size(); ++s) {
      const auto& spec = specs_[s];
      StageCache& sc = cache ? cache->stages[s] : local;
      if (spec.subsampled()) {
        sc.input.resize(spec.input_indices.size());
        for (std::size_t j = 0; j < spec.input_indices.size(); ++j) sc.input[j] = rec.residual[spec.input_indices[j]];
      } else {
        sc.input = rec.residual;
      }
      mlp_forward(s, sc);
      const auto& raw = sc.acts.back();
      const std::size_t P = raw.size();
      sc.z.resize(P);
      sc.jac.assign(cache ? P * T : 0, 0.0);
      std::vector<double> comp(T, 0.0);
      std::size_t k = 0;
      for (const auto& b : spec.bases) {
        const std::size_t pc = bofprior::param_count(b.family);
        for (std::size_t m = 0; m < b.multiplicity; ++m, k += pc) {
          for (std::size_t p = 0; p < pc; ++p)
            sc.z[k + p] = softplus_param(b.family, p) ? softplus(raw[k + p]) : raw[k + p];
          for (std::size_t i = 0; i < T; ++i) {
            comp[i] += value_and_grad(b.family, &sc.z[k], t[i], cache ? g.data() : nullptr, opt);
            if (cache)
              for (std::size_t p = 0; p < pc; ++p) sc.jac[(k + p) * T + i] = g[p];
          }
        }
      }
      for (std::size_t i = 0; i < T; ++i) {
        rec.x_hat[i] += comp[i];
        rec.residual[i] -= comp[i];
      }
      rec.latents.push_back(sc.z);
      rec.components.push_back(std::move(comp));
    }
    if (cache) cache->valid = true;
    return rec;
  }

  /// Adds dL/dtheta to `grad` given dL/dx_hat for the forward pass recorded
  /// in `cache`. Gradients reach earlier stages through the residuals that
  /// later stages consume.
  void backward(const ForwardCache& cache, std::span<const double> d_xhat, std::span<double> grad) const {
    const std::size_t T = grid_.size();
    if (!cache.valid || cache.stages.size() != specs_.size()) throw ArgumentError("backward needs a forward cache");
    if (d_xhat.size() != T) throw ArgumentError("upstream gradient has the wrong length");
    if (grad.size() != theta_.size()) throw ArgumentError("gradient buffer has the wrong length");
    std::vector<double> d_res(T, 0.0);  // dL/dr_s
    std::vector<double> d_comp(T);
    for (std::size_t s = specs_.size(); s-- > 0;) {
      const auto& spec = specs_[s];
      const auto& sc = cache.stages[s];
      // r_s = r_{s-1} - xhat_s and xhat = sum_s xhat_s
      for (std::size_t i = 0; i < T; ++i) d_comp[i] = d_xhat[i] - d_res[i];
      const std::size_t P = sc.z.size();
      std::vector<double> d_out(P, 0.0);
      std::size_t k = 0;
      for (const auto& b : spec.bases) {
        const std::size_t pc = bofprior::param_count(b.family);
        for (std::size_t m = 0; m < b.multiplicity; ++m, k += pc)
          for (std::size_t p = 0; p < pc; ++p) {
            const double* jr = &sc.jac[(k + p) * T];
            double acc = 0.0;
            for (std::size_t i = 0; i < T; ++i) acc += d_comp[i] * jr[i];
            if (softplus_param(b.family, p)) acc *= sigmoid(sc.acts.back()[k + p]);
            d_out[k + p] = acc;
          }
      }
      const auto d_in = mlp_backward(s, sc, d_out, grad);
      if (spec.subsampled()) {
        for (std::size_t j = 0; j < spec.input_indices.size(); ++j) d_res[spec.input_indices[j]] += d_in[j];
      } else {
        for (std::size_t i = 0; i < T; ++i) d_res[i] += d_in[i];
      }
    }
  }

private:
  void mlp_forward(std::size_t s, StageCache& sc) const {
    const auto& layers = layers_[s];
    sc.acts.resize(layers.size());
    const std::vector<double>* in = &sc.input;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& L = layers[l];
      auto& out = sc.acts[l];
      out.resize(L.out);
      const double* W = &theta_[L.w_offset];
      const double* B = &theta_[L.b_offset];
      const bool relu = l + 1 < layers.size();
      for (std::size_t o = 0; o < L.out; ++o) {
        double acc = B[o];
        const double* w = W + o * L.in;
        for (std::size_t i = 0; i < L.in; ++i) acc += w[i] * (*in)[i];
        out[o] = relu && acc < 0.0 ? 0.0 : acc;
      }
      in = &out;
    }
  }

  std::vector<double> mlp_backward(std::size_t s, const StageCache& sc, std::vector<double> d_out,
                                   std::span<double> grad) const {
    const auto& layers = layers_[s];
    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& L = layers[l];
      const std::vector<double>& in = l == 0 ? sc.input : sc.acts[l - 1];
      const double* W = &theta_[L.w_offset];
      double* gW = &grad[L.w_offset];
      double* gB = &grad[L.b_offset];
      std::vector<double> d_in(L.in, 0.0);
      for (std::size_t o = 0; o < L.out; ++o) {
        const double d = d_out[o];
        if (d == 0.0) continue;
        gB[o] += d;
        const double* w = W + o * L.in;
        double* gw = gW + o * L.in;
        for (std::size_t i = 0; i < L.in; ++i) {
          gw[i] += d * in[i];
          d_in[i] += d * w[i];
        }
      }
      if (l > 0)
        for (std::size_t i = 0; i < L.in; ++i)
          if (in[i] <= 0.0) d_in[i] = 0.0;  // ReLU
      d_out = std::move(d_in);
    }
    return d_out;
  }

  TimeGrid grid_{2};
  std::vector<StageSpec> specs_;
  std::vector<std::size_t> hidden_;
  std::vector<std::vector<LayerLayout>> layers_;
  std::vector<double> theta_;
  Variant variant_ = Variant::bof;
};

inline double param_displacement(std::span<const double> theta, std::span<const double> snapshot) {
  if (theta.size() != snapshot.size()) throw ArgumentError("snapshot does not match the model's parameter count");
  if (theta.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) acc += std::abs(theta[i] - snapshot[i]);
  return acc / static_cast<double>(theta.size());
}

inline double param_displacement(const BofModel& m, std::span<const double> snapshot) {
  return param_displacement(m.parameters(), snapshot);
}

// ---- architecture ----

struct ArchitectureOptions {
  std::vector<std::size_t> hidden{64, 64};
  std::size_t default_depth = 3;  // seasonal blocks for BoF and H-BoF
};

inline StageSpec seasonal_stage() { return {StageKind::seasonal, {{Family::cosine, 1}}, {}}; }
inline StageSpec trend_stage(std::vector<std::size_t> indices = {}) {
  return {StageKind::trend, {{Family::constant, 1}, {Family::linear, 1}}, std::move(indices)};
}
inline StageSpec event_stage() { return {StageKind::event, {{Family::gaussian, 1}}, {}}; }

/// S blocks of [seasonal, trend] followed by one event stage; S = 0 keeps
/// a single trend stage. BoF and H-BoF use the fixed default depth.
inline BofModel build_architecture(const TimeGrid& grid, Variant v, const PriorConfig* config = nullptr,
                                   const ArchitectureOptions& opt = {}) {
  if (needs_config(v) && !config)
    throw ConfigError(std::string(display_name(v)) + " needs a prior configuration");
  if (config && config->n_samples() != 0 && config->n_samples() != grid.size())
    throw ConfigError("prior configuration was derived for series of length " + std::to_string(config->n_samples()) +
                      ", data has " + std::to_string(grid.size()));
  const std::size_t S = needs_config(v) ? config->S : opt.default_depth;
  std::vector<std::size_t> idx;
  if (v == Variant::itbof) {
    config->validate();
    idx = config->trend_indices;
  }
  std::vector<StageSpec> stages;
  for (std::size_t j = 0; j < S; ++j) {
    stages.push_back(seasonal_stage());
    stages.push_back(trend_stage(idx));
  }
  if (S == 0) stages.push_back(trend_stage(idx));
  stages.push_back(event_stage());
  return BofModel(grid, std::move(stages), opt.hidden, v);
}

// ---- initialization ----

inline constexpr double kInformedOutputGain = 0.1;

struct InitStrategy {
  Variant variant = Variant::bof;
  const PriorConfig* config = nullptr;  // required for i-bof / it-bof
  RoleTable table;                      // h-bof roles, and event roles for informed variants
  double output_gain = kInformedOutputGain;
  std::uint64_t seed = 0;
};

/// Kaiming-uniform weights (bound sqrt(6/fan_in) before a ReLU,
/// sqrt(3/fan_in) on the identity output) and zero biases. Non-default
/// variants then damp the output weights and draw output biases from the
/// role distributions. Weights come from the "weights" substream and biases
/// from "bias", so variants sharing a seed share their weights.
inline void initialize(BofModel& model, const InitStrategy& init) {
  const Rng root(init.seed);
  auto& theta = model.parameters();
  std::fill(theta.begin(), theta.end(), 0.0);
  for (std::size_t s = 0; s < model.stages().size(); ++s) {
    Rng rng = root.split("weights", s);
    const auto& layers = model.layers(s);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& L = layers[l];
      const double gain = l + 1 < layers.size() ? 6.0 : 3.0;
      const double bound = std::sqrt(gain / static_cast<double>(L.in));
      for (std::size_t i = 0; i < L.in * L.out; ++i) theta[L.w_offset + i] = rng.uniform(-bound, bound);
    }
  }
  model.set_variant(init.variant);
  if (init.variant == Variant::bof) return;

  const PriorConfig* cfg = init.config;
  if (needs_config(init.variant)) {
    if (!cfg) throw ConfigError(std::string(display_name(init.variant)) + " initialization needs a prior configuration");
    std::size_t seasonal = 0;
    for (const auto& s : model.stages()) seasonal += s.kind == StageKind::seasonal;
    if (seasonal != cfg->S)
      throw ConfigError("prior configuration has S=" + std::to_string(cfg->S) + " but the model has " +
                        std::to_string(seasonal) + " seasonal stages");
    if (cfg->seasonal_stats.size() != cfg->S) throw ConfigError("prior configuration lacks seasonal statistics");
  }
  const double angular = 2.0 * std::numbers::pi * (cfg ? cfg->duration() : model.grid().duration());

  std::size_t seasonal_seen = 0, trend_seen = 0;
  for (std::size_t s = 0; s < model.stages().size(); ++s) {
    const auto& spec = model.stages()[s];
    const auto& L = model.layers(s).back();
    for (std::size_t i = 0; i < L.in * L.out; ++i) theta[L.w_offset + i] *= init.output_gain;
    Rng rng = root.split("bias", s);
    std::size_t k = 0;
    for (const auto& b : spec.bases) {
      const std::size_t pc = bofprior::param_count(b.family);
      for (std::size_t m = 0; m < b.multiplicity; ++m)
        for (std::size_t p = 0; p < pc; ++p, ++k) {
          const Role role = role_of(b.family, p);
          double mean, sd;
          if (needs_config(init.variant) && spec.kind == StageKind::seasonal &&
              (role == Role::amplitude || role == Role::frequency || role == Role::phase)) {
            const auto& st = cfg->seasonal_stats.at(seasonal_seen);
            const ParamStats& ps = role == Role::amplitude ? st.amplitude : role == Role::frequency ? st.frequency : st.phase;
            mean = ps.mean;
            sd = ps.stddev();
            if (role == Role::frequency) {
              mean *= angular;
              sd *= angular;
            }
          } else if (needs_config(init.variant) && spec.kind == StageKind::trend &&
                     (role == Role::slope || role == Role::bias)) {
            const ParamStats& ps = role == Role::slope ? cfg->trend_stats.slope : cfg->trend_stats.bias;
            mean = trend_seen == 0 ? ps.mean : 0.0;
            sd = ps.stddev();
          } else {
            const auto d = init.table.get(role);
            mean = d.mean;
            sd = d.stddev;
          }
          double v = rng.normal(mean, sd);
          if (softplus_param(b.family, p)) v = softplus_inverse(std::max(v, 1e-3));
          theta[L.b_offset + k] = v;
        }
    }
    seasonal_seen += spec.kind == StageKind::seasonal;
    trend_seen += spec.kind == StageKind::trend;
  }
}

// ---- serialization ----

inline constexpr int kModelSchemaVersion = 1;

inline nlohmann::json model_to_json(const BofModel& m) {
  nlohmann::json stages = nlohmann::json::array();
  for (std::size_t s = 0; s < m.stages().size(); ++s) {
    const auto& spec = m.stages()[s];
    nlohmann::json bases = nlohmann::json::array();
    for (const auto& b : spec.bases) bases.push_back({{"family", name(b.family)}, {"multiplicity", b.multiplicity}});
    nlohmann::json widths = nlohmann::json::array();
    widths.push_back(m.layers(s).front().in);
    for (const auto& L : m.layers(s)) widths.push_back(L.out);
    stages.push_back(
        {{"kind", to_string(spec.kind)}, {"bases", bases}, {"input_indices", spec.input_indices}, {"widths", widths}});
  }
  return {{"schema_version", kModelSchemaVersion},
          {"variant", to_string(m.variant())},
          {"n_samples", m.grid().size()},
          {"duration_seconds", m.grid().duration()},
          {"hidden", m.hidden()},
          {"stages", stages},
          {"param_count", m.param_count()},
          {"parameters", m.parameters()}};
}

inline BofModel model_from_json(const nlohmann::json& j) {
  using detail::get;
  if (get<int>(j, "schema_version", "") != kModelSchemaVersion) throw FormatError("unsupported model schema_version");
  const auto T = get<std::size_t>(j, "n_samples", "");
  const auto duration = get<double>(j, "duration_seconds", "");
  const auto hidden = get<std::vector<std::size_t>>(j, "hidden", "");
  const auto& stages = detail::field(j, "stages", "");
  if (!stages.is_array()) throw FormatError("field 'stages' must be an array");
  std::vector<StageSpec> specs;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string w = "stages[" + std::to_string(s) + "]";
    StageSpec spec;
    spec.kind = stage_kind_from_string(get<std::string>(stages[s], "kind", w));
    spec.input_indices = get<std::vector<std::size_t>>(stages[s], "input_indices", w);
    const auto& bases = detail::field(stages[s], "bases", w);
    for (std::size_t b = 0; b < bases.size(); ++b) {
      const std::string wb = w + ".bases[" + std::to_string(b) + "]";
      try {
        spec.bases.push_back({family_from_string(get<std::string>(bases[b], "family", wb)),
                              get<std::size_t>(bases[b], "multiplicity", wb)});
      } catch (const ArgumentError& e) {
        throw FormatError(wb + ": " + e.what());
      }
    }
    specs.push_back(std::move(spec));
  }
  BofModel m;
  try {
    m = BofModel(TimeGrid(T, duration), std::move(specs), hidden);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid model description: ") + e.what());
  }
  try {
    m.set_variant(variant_from_string(get<std::string>(j, "variant", "")));
    m.set_parameters(get<std::vector<double>>(j, "parameters", ""));
  } catch (const ArgumentError& e) {
    throw FormatError(e.what());
  }
  return m;
}

} // namespace bofprior
