#include "robrl/serialize.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <type_traits>
#include <sstream>

namespace robrl {

using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

namespace {

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_json(const RowMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).data(), m.row(i).data() + m.cols()));
  }
  return rows;
}

RowMatrix matrix_from(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  RowMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw ConfigError("ragged matrix in JSON");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
  }
  return m;
}

json noise_json(const NoiseSpec& noise) {
  if (noise.kind == NoiseKind::none) return {{"kind", "none"}};
  return {{"kind", "pareto_centered"}, {"tail_index", noise.tail_index}, {"scale", noise.scale}};
}

NoiseSpec noise_from(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "none") return NoiseSpec::none();
  if (kind != "pareto_centered") throw ConfigError("unknown noise kind '" + kind + "'");
  return NoiseSpec::pareto(j.at("tail_index").get<double>(), j.at("scale").get<double>());
}

json features_json(const FeatureMap& f) {
  json j{{"phi", matrix_json(f.phi)}};
  j["theta_star"] = f.theta_star ? vector_json(*f.theta_star) : json(nullptr);
  return j;
}

FeatureMap features_from(const json& j) {
  FeatureMap f;
  f.phi = matrix_from(j.at("phi"));
  if (j.contains("theta_star") && !j.at("theta_star").is_null()) {
    f.theta_star = vector_from(j.at("theta_star"));
  }
  return f;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json optional_vector_json(const std::optional<Vector>& v) {
  return v ? vector_json(*v) : json(nullptr);
}

}  // namespace

std::string environment_to_json(const Environment& env) {
  json j;
  if (const auto* e = std::get_if<RealizableEnvironment>(&env)) {
    j["kind"] = "mrp";
    j["recipe"] = e->mrp.recipe;
    j["seed"] = e->mrp.seed;
    j["discount"] = e->mrp.discount;
    j["noise"] = noise_json(e->mrp.noise);
    j["transition"] = matrix_json(e->mrp.transition);
    j["mean_reward"] = vector_json(e->mrp.mean_reward);
    j["features"] = features_json(e->features);
  } else {
    const auto& m = std::get<MarkovDecisionProcess>(env);
    j["kind"] = "mdp";
    j["recipe"] = m.recipe;
    j["seed"] = m.seed;
    j["discount"] = m.discount;
    j["noise"] = noise_json(m.noise);
    j["n_states"] = m.n_states;
    j["n_actions"] = m.n_actions;
    json kernels = json::array();
    for (const auto& k : m.kernels) kernels.push_back(matrix_json(k));
    j["kernels"] = std::move(kernels);
    j["mean_reward"] = matrix_json(m.mean_reward);
    j["features"] = features_json(m.features);
  }
  return j.dump(1);
}

Environment environment_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "mrp") {
      RealizableEnvironment e;
      e.mrp.recipe = j.at("recipe").get<std::string>();
      e.mrp.seed = j.at("seed").get<std::uint64_t>();
      e.mrp.discount = j.at("discount").get<double>();
      e.mrp.noise = noise_from(j.at("noise"));
      e.mrp.transition = matrix_from(j.at("transition"));
      e.mrp.mean_reward = vector_from(j.at("mean_reward"));
      e.features = features_from(j.at("features"));
      e.mrp.validate();
      if (e.features.n_rows() != e.mrp.n_states()) {
        throw ConfigError("environment: feature rows do not match the state count");
      }
      e.features.validate();
      return e;
    }
    if (kind == "mdp") {
      MarkovDecisionProcess m;
      m.recipe = j.at("recipe").get<std::string>();
      m.seed = j.at("seed").get<std::uint64_t>();
      m.discount = j.at("discount").get<double>();
      m.noise = noise_from(j.at("noise"));
      m.n_states = j.at("n_states").get<std::size_t>();
      m.n_actions = j.at("n_actions").get<std::size_t>();
      for (const auto& k : j.at("kernels")) m.kernels.push_back(matrix_from(k));
      m.mean_reward = matrix_from(j.at("mean_reward"));
      m.features = features_from(j.at("features"));
      m.validate();
      return m;
    }
    throw ConfigError("environment: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("environment JSON: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_environment(const std::filesystem::path& path, const Environment& env) {
  write_text_file(path, environment_to_json(env) + "\n");
}

Environment load_environment(const std::filesystem::path& path) {
  return environment_from_json(read_text_file(path));
}

namespace {

json grid_json(const RecordGrid& g) {
  if (g.kind == RecordGrid::Kind::geometric) return {{"kind", "geometric"}};
  return {{"kind", "stride"}, {"stride", g.stride}};
}

RecordGrid grid_from(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "geometric") return RecordGrid::geometric();
  if (kind == "stride") return RecordGrid::every(j.at("stride").get<std::uint64_t>());
  throw ConfigError("unknown grid kind '" + kind + "'");
}

json spec_json(const ExperimentSpec& s) {
  json env{{"recipe", to_string(s.env.recipe)},
           {"n_states", s.env.n_states},
           {"dim", s.env.dim},
           {"n_actions", s.env.n_actions},
           {"discount", s.env.discount},
           {"tail_index", optional_json(s.env.tail_index)},
           {"noise_scale", s.env.noise_scale},
           {"rho", s.env.rho},
           {"features", to_string(s.env.features)},
           {"path", s.env.path}};
  json algorithms = json::array();
  for (auto a : s.algorithms) algorithms.push_back(to_string(a));
  json td{{"horizon", s.td.horizon},
          {"projection_radius", optional_json(s.td.projection_radius)},
          {"tight_radius", s.td.tight_radius},
          {"clip", to_string(s.td.clip)},
          {"step", to_string(s.td.step)},
          {"p", optional_json(s.td.p)},
          {"u", optional_json(s.td.u)},
          {"delta", s.td.delta},
          {"eta", optional_json(s.td.eta)},
          {"sampling", to_string(s.td.sampling)},
          {"grid", grid_json(s.td.grid)},
          {"grad_log_every", s.td.grad_log_every}};
  const NacConfig& n = s.nac;
  json nac{{"outer_iterations", n.outer_iterations},
           {"critic_horizon", n.critic_horizon},
           {"delta", n.delta},
           {"projection_radius", optional_json(n.projection_radius)},
           {"p", optional_json(n.p)},
           {"u", optional_json(n.u)},
           {"critic_clip", to_string(n.critic_clip)},
           {"critic_step", to_string(n.critic_step)},
           {"critic_eta", optional_json(n.critic_eta)},
           {"actor_lr", optional_json(n.actor_lr)},
           {"critic_sampling", to_string(n.critic_sampling)},
           {"initial_dist", optional_vector_json(n.initial_dist)},
           {"w_init", optional_vector_json(n.w_init)},
           {"snapshot_every", n.snapshot_every}};
  return {{"env", std::move(env)},         {"algorithms", std::move(algorithms)},
          {"td", std::move(td)},           {"nac", std::move(nac)},
          {"n_trials", s.n_trials},        {"base_seed", s.base_seed},
          {"output_dir", s.output_dir}};
}

// Reads the keys of one JSON object into fields, collecting every problem instead of stopping.
// Like json::get, but refuses negative or fractional numbers for unsigned fields instead of
// letting them wrap around.
template <typename T>
T checked_get(const json& v) {
  if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (v.is_number_unsigned()) return v.get<T>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && d == std::floor(d) && d <= 9007199254740992.0) return static_cast<T>(d);
    }
    throw ConfigError("expected a non-negative integer, got " + v.dump());
  } else {
    return v.get<T>();
  }
}

class FieldReader {
 public:
  using Setter = std::function<void(const json&)>;

  FieldReader(std::string prefix, std::vector<std::string>& errors)
      : prefix_(std::move(prefix)), errors_(errors) {}

  void on(const std::string& key, Setter setter) { setters_.emplace(key, std::move(setter)); }

  template <typename T>
  void field(const std::string& key, T& target) {
    on(key, [&target](const json& v) { target = checked_get<T>(v); });
  }

  template <typename T>
  void optional(const std::string& key, std::optional<T>& target) {
    on(key, [&target](const json& v) {
      if (v.is_null()) {
        target.reset();
      } else {
        target = checked_get<T>(v);
      }
    });
  }

  void optional_vector(const std::string& key, std::optional<Vector>& target) {
    on(key, [&target](const json& v) {
      if (v.is_null()) {
        target.reset();
      } else {
        target = vector_from(v);
      }
    });
  }

  template <typename E>
  void enumeration(const std::string& key, E& target, E (*parse)(const std::string&)) {
    on(key, [&target, parse](const json& v) { target = parse(v.get<std::string>()); });
  }

  void apply(const json& object) {
    if (!object.is_object()) {
      errors_.push_back(prefix_ + ": expected an object");
      return;
    }
    for (const auto& [key, value] : object.items()) {
      const auto it = setters_.find(key);
      const std::string name = prefix_.empty() ? key : prefix_ + "." + key;
      if (it == setters_.end()) {
        errors_.push_back("unknown key '" + name + "'");
        continue;
      }
      try {
        it->second(value);
      } catch (const json::exception& e) {
        errors_.push_back(name + ": " + e.what());
      } catch (const std::exception& e) {
        errors_.push_back(name + ": " + e.what());
      }
    }
  }

 private:
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::map<std::string, Setter> setters_;
};

void apply_spec(ExperimentSpec& s, const json& j, std::vector<std::string>& errors) {
  FieldReader env("env", errors);
  env.enumeration("recipe", s.env.recipe, parse_env_recipe);
  env.field("n_states", s.env.n_states);
  env.field("dim", s.env.dim);
  env.field("n_actions", s.env.n_actions);
  env.field("discount", s.env.discount);
  env.optional("tail_index", s.env.tail_index);
  env.field("noise_scale", s.env.noise_scale);
  env.field("rho", s.env.rho);
  env.enumeration("features", s.env.features, parse_feature_kind);
  env.field("path", s.env.path);

  FieldReader td("td", errors);
  td.field("horizon", s.td.horizon);
  td.optional("projection_radius", s.td.projection_radius);
  td.field("tight_radius", s.td.tight_radius);
  td.enumeration("clip", s.td.clip, parse_clip_kind);
  td.enumeration("step", s.td.step, parse_step_kind);
  td.optional("p", s.td.p);
  td.optional("u", s.td.u);
  td.field("delta", s.td.delta);
  td.optional("eta", s.td.eta);
  td.enumeration("sampling", s.td.sampling, parse_sampling_mode);
  td.on("grid", [&s](const json& v) { s.td.grid = grid_from(v); });
  td.field("grad_log_every", s.td.grad_log_every);

  NacConfig& n = s.nac;
  FieldReader nac("nac", errors);
  nac.field("outer_iterations", n.outer_iterations);
  nac.field("critic_horizon", n.critic_horizon);
  nac.field("delta", n.delta);
  nac.optional("projection_radius", n.projection_radius);
  nac.optional("p", n.p);
  nac.optional("u", n.u);
  nac.enumeration("critic_clip", n.critic_clip, parse_clip_kind);
  nac.enumeration("critic_step", n.critic_step, parse_step_kind);
  nac.optional("critic_eta", n.critic_eta);
  nac.optional("actor_lr", n.actor_lr);
  nac.enumeration("critic_sampling", n.critic_sampling, parse_sampling_mode);
  nac.optional_vector("initial_dist", n.initial_dist);
  nac.optional_vector("w_init", n.w_init);
  nac.field("snapshot_every", n.snapshot_every);

  FieldReader top("", errors);
  top.on("env", [&env](const json& v) { env.apply(v); });
  top.on("td", [&td](const json& v) { td.apply(v); });
  top.on("nac", [&nac](const json& v) { nac.apply(v); });
  top.on("algorithms", [&s](const json& v) {
    s.algorithms.clear();
    for (const auto& a : v) s.algorithms.push_back(parse_algorithm(a.get<std::string>()));
  });
  top.field("n_trials", s.n_trials);
  top.field("base_seed", s.base_seed);
  top.field("output_dir", s.output_dir);
  top.apply(j);
}

}  // namespace

std::string spec_to_json(const ExperimentSpec& spec) { return spec_json(spec).dump(2); }

ExperimentSpec merge_spec_json(ExperimentSpec base, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spec JSON: ") + e.what());
  }
  std::vector<std::string> errors;
  apply_spec(base, j, errors);
  if (!errors.empty()) {
    std::ostringstream os;
    os << "invalid spec file:";
    for (const auto& e : errors) os << "\n  - " << e;
    throw ConfigError(os.str());
  }
  return base;
}

ExperimentSpec spec_from_json(const std::string& text) { return merge_spec_json({}, text); }

std::string spec_hash(const ExperimentSpec& spec) {
  // Where results land does not change them.
  json j = spec_json(spec);
  j.erase("output_dir");
  const std::string canonical = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace robrl
