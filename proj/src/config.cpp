#include "sphereflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "sphereflow/datasets.hpp"
#include "sphereflow/error.hpp"

namespace sphereflow {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw Error(ErrorKind::ConfigError, field + ": " + message);
}

double parse_double(const std::string& field, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) fail(field, "expected a number, got '" + text + "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& field, const std::string& text) {
  Int v{};
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) fail(field, "expected an integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& field, const std::string& text) {
  const auto v = lower(text);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(field, "expected true or false, got '" + text + "'");
}

std::optional<double> parse_auto(const std::string& field, const std::string& text) {
  if (lower(text) == "auto") return std::nullopt;
  return parse_double(field, text);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"variant", [](auto& c, auto& f, auto& v) {
         try {
           c.method = parse_flow_method(v);
         } catch (const Error&) {
           fail(f, "unknown variant '" + v + "' (icfm, otcfm, sotcfm, sfm)");
         }
       }},
      {"source_projection", [](auto& c, auto& f, auto& v) { c.source_projection = parse_bool(f, v); }},
      {"target_projection", [](auto& c, auto& f, auto& v) { c.target_projection = parse_bool(f, v); }},
      {"dim", [](auto& c, auto& f, auto& v) { c.dim = parse_int<int>(f, v); }},
      {"radius", [](auto& c, auto& f, auto& v) { c.radius = parse_auto(f, v); }},
      {"mixture_components", [](auto& c, auto& f, auto& v) { c.mixture_components = parse_int<int>(f, v); }},
      {"kappa", [](auto& c, auto& f, auto& v) { c.kappa = parse_double(f, v); }},
      {"target_norm_mean", [](auto& c, auto& f, auto& v) { c.target_norm_mean = parse_double(f, v); }},
      {"target_norm_std", [](auto& c, auto& f, auto& v) { c.target_norm_std = parse_double(f, v); }},
      {"batch_size", [](auto& c, auto& f, auto& v) { c.batch_size = parse_int<int>(f, v); }},
      {"ot_batch_size", [](auto& c, auto& f, auto& v) { c.ot_batch_size = parse_int<int>(f, v); }},
      {"sinkhorn_eps", [](auto& c, auto& f, auto& v) { c.sinkhorn_eps = parse_double(f, v); }},
      {"sinkhorn_iters", [](auto& c, auto& f, auto& v) { c.sinkhorn_iters = parse_int<int>(f, v); }},
      {"sinkhorn_tol", [](auto& c, auto& f, auto& v) { c.sinkhorn_tol = parse_double(f, v); }},
      {"pairing", [](auto& c, auto& f, auto& v) {
         const auto m = lower(v);
         if (m == "sample") c.pairing = PairingMode::SamplePlan;
         else if (m == "exact") c.pairing = PairingMode::ExactAssignment;
         else fail(f, "expected 'sample' or 'exact', got '" + v + "'");
       }},
      {"learning_rate", [](auto& c, auto& f, auto& v) { c.learning_rate = parse_double(f, v); }},
      {"beta1", [](auto& c, auto& f, auto& v) { c.beta1 = parse_double(f, v); }},
      {"beta2", [](auto& c, auto& f, auto& v) { c.beta2 = parse_double(f, v); }},
      {"weight_decay", [](auto& c, auto& f, auto& v) { c.weight_decay = parse_double(f, v); }},
      {"ema_decay", [](auto& c, auto& f, auto& v) { c.ema_decay = parse_double(f, v); }},
      {"hidden_width", [](auto& c, auto& f, auto& v) { c.hidden_width = parse_int<int>(f, v); }},
      {"hidden_layers", [](auto& c, auto& f, auto& v) { c.hidden_layers = parse_int<int>(f, v); }},
      {"time_embed_dim", [](auto& c, auto& f, auto& v) { c.time_embed_dim = parse_int<int>(f, v); }},
      {"train_iters", [](auto& c, auto& f, auto& v) { c.train_iters = parse_int<int>(f, v); }},
      {"log_every", [](auto& c, auto& f, auto& v) { c.log_every = parse_int<int>(f, v); }},
      {"nfe", [](auto& c, auto& f, auto& v) { c.nfe = parse_int<int>(f, v); }},
      {"seed", [](auto& c, auto& f, auto& v) { c.seed = parse_int<std::uint64_t>(f, v); }},
      {"data_seed", [](auto& c, auto& f, auto& v) { c.data_seed = parse_int<std::uint64_t>(f, v); }},
      {"output_dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
      {"final_norm", [](auto& c, auto& f, auto& v) { c.final_norm = parse_auto(f, v); }},
      {"rescale", [](auto& c, auto& f, auto& v) { c.rescale = parse_bool(f, v); }},
  };
  return table;
}

void require_positive(const char* field, double v) {
  if (!(v > 0.0)) fail(field, "must be positive");
}

}  // namespace

double ExperimentConfig::resolved_radius() const {
  return radius ? *radius : expected_gaussian_norm(dim);
}

FlowVariant ExperimentConfig::variant() const {
  try {
    return FlowVariant(method, source_projection, target_projection, resolved_radius());
  } catch (const Error& e) {
    fail("variant", e.what());
  }
}

CouplerConfig ExperimentConfig::coupler() const {
  CouplerConfig c;
  c.mode = pairing;
  c.sinkhorn = {sinkhorn_eps, sinkhorn_iters, sinkhorn_tol};
  c.ot_batch_size = static_cast<std::size_t>(ot_batch_size);
  return c;
}

AdamConfig ExperimentConfig::adam() const {
  AdamConfig a;
  a.learning_rate = learning_rate;
  a.beta1 = beta1;
  a.beta2 = beta2;
  a.weight_decay = weight_decay;
  return a;
}

MlpShape ExperimentConfig::shape() const {
  MlpShape s;
  s.data_dim = dim;
  s.hidden.assign(static_cast<std::size_t>(hidden_layers), hidden_width);
  s.time_embed_dim = time_embed_dim;
  return s;
}

void ExperimentConfig::validate() const {
  if (dim < 2) fail("dim", "must be at least 2");
  if (radius) require_positive("radius", *radius);
  if (mixture_components < 1) fail("mixture_components", "must be at least 1");
  if (!(kappa >= 0.0)) fail("kappa", "must be nonnegative");
  require_positive("target_norm_mean", target_norm_mean);
  if (!(target_norm_std >= 0.0)) fail("target_norm_std", "must be nonnegative");
  if (batch_size < 1) fail("batch_size", "must be positive");
  if (ot_batch_size < 1) fail("ot_batch_size", "must be positive");
  require_positive("sinkhorn_eps", sinkhorn_eps);
  if (sinkhorn_iters < 1) fail("sinkhorn_iters", "must be positive");
  require_positive("sinkhorn_tol", sinkhorn_tol);
  require_positive("learning_rate", learning_rate);
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1", "must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2", "must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) fail("weight_decay", "must be nonnegative");
  if (!(ema_decay >= 0.0 && ema_decay <= 1.0)) fail("ema_decay", "must lie in [0, 1]");
  if (hidden_width < 1) fail("hidden_width", "must be positive");
  if (hidden_layers < 1) fail("hidden_layers", "must be positive");
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0) fail("time_embed_dim", "must be even and >= 2");
  if (train_iters < 1) fail("train_iters", "must be positive");
  if (log_every < 1) fail("log_every", "must be positive");
  if (nfe < 1) fail("nfe", "must be positive");
  if (final_norm) require_positive("final_norm", *final_norm);
  if (method == FlowMethod::SFM && !(source_projection && target_projection)) {
    fail("variant", "sfm is inapplicable without source_projection and target_projection "
                    "(both sides must live on the sphere)");
  }
  (void)variant();
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
  ExperimentConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const auto body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) fail(where, "expected 'key = value'");
    const auto key = lower(trim(std::string_view(body).substr(0, eq)));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) fail(where, "unknown key '" + key + "'");
    if (value.empty()) fail(key, "missing value");
    it->second(config, key, value);
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
  return parse_config(in, path);
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  const auto opt = [](const std::optional<double>& v) {
    std::ostringstream s;
    s.precision(17);
    if (v) s << *v; else s << "auto";
    return s.str();
  };
  const auto prec = out.precision(17);
  out << "variant = " << to_string(c.method) << '\n'
      << "source_projection = " << (c.source_projection ? "true" : "false") << '\n'
      << "target_projection = " << (c.target_projection ? "true" : "false") << '\n'
      << "dim = " << c.dim << '\n'
      << "radius = " << opt(c.radius) << '\n'
      << "mixture_components = " << c.mixture_components << '\n'
      << "kappa = " << c.kappa << '\n'
      << "target_norm_mean = " << c.target_norm_mean << '\n'
      << "target_norm_std = " << c.target_norm_std << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "ot_batch_size = " << c.ot_batch_size << '\n'
      << "sinkhorn_eps = " << c.sinkhorn_eps << '\n'
      << "sinkhorn_iters = " << c.sinkhorn_iters << '\n'
      << "sinkhorn_tol = " << c.sinkhorn_tol << '\n'
      << "pairing = " << (c.pairing == PairingMode::SamplePlan ? "sample" : "exact") << '\n'
      << "learning_rate = " << c.learning_rate << '\n'
      << "beta1 = " << c.beta1 << '\n'
      << "beta2 = " << c.beta2 << '\n'
      << "weight_decay = " << c.weight_decay << '\n'
      << "ema_decay = " << c.ema_decay << '\n'
      << "hidden_width = " << c.hidden_width << '\n'
      << "hidden_layers = " << c.hidden_layers << '\n'
      << "time_embed_dim = " << c.time_embed_dim << '\n'
      << "train_iters = " << c.train_iters << '\n'
      << "log_every = " << c.log_every << '\n'
      << "nfe = " << c.nfe << '\n'
      << "seed = " << c.seed << '\n'
      << "data_seed = " << c.data_seed << '\n'
      << "output_dir = " << c.output_dir << '\n'
      << "final_norm = " << opt(c.final_norm) << '\n'
      << "rescale = " << (c.rescale ? "true" : "false") << '\n';
  out.precision(prec);
}

}  // namespace sphereflow
