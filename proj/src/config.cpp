#include "fedsim/config.hpp"

#include <cmath>
#include <set>

#include "fedsim/errors.hpp"
#include "fedsim/toml.hpp"

namespace fedsim {

std::string to_string(RunTask task) { return task == RunTask::fl ? "fl" : "bandit"; }

std::string to_string(BaselineKind kind) {
  return kind == BaselineKind::fedavg ? "fedavg" : "fedprox";
}

namespace {

[[noreturn]] void bad_key(const std::string& path, const std::string& what, int line) {
  std::string msg = "'" + path + "' " + what;
  if (line > 0) msg += " (line " + std::to_string(line) + ")";
  throw ConfigError(msg);
}

// Read-only view of one config table that records which keys were consumed,
// so the loader can reject unknown keys afterwards. A view over an absent
// table hands out defaults.
class TableView {
 public:
  TableView(const toml::Value* table, std::string path, std::set<std::string>* seen)
      : table_(table), path_(std::move(path)), seen_(seen) {}

  const std::string& path() const { return path_; }
  bool present() const { return table_ != nullptr; }

  bool has(const std::string& key) const { return find(key) != nullptr; }

  TableView sub(const std::string& key) const {
    const toml::Value* v = find(key);
    if (v != nullptr && v->type != toml::Value::Type::table) {
      bad_key(child(key), "must be a [table]", v->line);
    }
    return TableView(v, child(key), seen_);
  }

  std::vector<TableView> sub_array(const std::string& key) const {
    const toml::Value* v = find(key);
    std::vector<TableView> out;
    if (v == nullptr) return out;
    if (v->type != toml::Value::Type::table_array) {
      bad_key(child(key), "must be an [[array of tables]]", v->line);
    }
    for (std::size_t i = 0; i < v->array.size(); ++i) {
      out.emplace_back(&v->array[i], child(key) + "[" + std::to_string(i) + "]", seen_);
    }
    return out;
  }

  std::string get_string(const std::string& key, const std::string& def) const {
    const toml::Value* v = find(key);
    if (v == nullptr) return def;
    if (v->type != toml::Value::Type::string) bad_key(child(key), "must be a string", v->line);
    return v->str;
  }

  bool get_bool(const std::string& key, bool def) const {
    const toml::Value* v = find(key);
    if (v == nullptr) return def;
    if (v->type != toml::Value::Type::boolean) bad_key(child(key), "must be true or false", v->line);
    return v->boolean;
  }

  std::int64_t get_int(const std::string& key, std::int64_t def) const {
    const toml::Value* v = find(key);
    if (v == nullptr) return def;
    if (v->type != toml::Value::Type::integer) bad_key(child(key), "must be an integer", v->line);
    return v->integer;
  }

  double get_double(const std::string& key, double def) const {
    const toml::Value* v = find(key);
    if (v == nullptr) return def;
    if (v->type != toml::Value::Type::integer && v->type != toml::Value::Type::floating) {
      bad_key(child(key), "must be a number", v->line);
    }
    return v->as_number();
  }

  std::vector<double> get_double_array(const std::string& key) const {
    const toml::Value* v = find(key);
    std::vector<double> out;
    if (v == nullptr) return out;
    if (v->type != toml::Value::Type::array) bad_key(child(key), "must be an array", v->line);
    for (const toml::Value& e : v->array) {
      if (e.type != toml::Value::Type::integer && e.type != toml::Value::Type::floating) {
        bad_key(child(key), "must contain only numbers", e.line);
      }
      out.push_back(e.as_number());
    }
    return out;
  }

 private:
  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const toml::Value* find(const std::string& key) const {
    if (table_ == nullptr) return nullptr;
    auto it = table_->table.find(key);
    if (it == table_->table.end()) return nullptr;
    if (seen_ != nullptr) seen_->insert(child(key));
    return &it->second;
  }

  const toml::Value* table_;
  std::string path_;
  std::set<std::string>* seen_;
};

void check_unknown_keys(const toml::Value& table, const std::string& path,
                        const std::set<std::string>& seen) {
  for (const auto& [key, value] : table.table) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (seen.count(full) == 0) {
      bad_key(full, "is not a recognized config key", value.line);
    }
    if (value.type == toml::Value::Type::table) {
      check_unknown_keys(value, full, seen);
    } else if (value.type == toml::Value::Type::table_array) {
      for (std::size_t i = 0; i < value.array.size(); ++i) {
        check_unknown_keys(value.array[i], full + "[" + std::to_string(i) + "]", seen);
      }
    }
  }
}

DimKind dim_kind_from_config(const std::string& text, const std::string& path) {
  if (text == "continuous") return DimKind::continuous_positive;
  if (text == "integer") return DimKind::integer_count;
  if (text == "simplex") return DimKind::simplex_weight;
  throw ConfigError("'" + path + "' must be continuous, integer, or simplex; got '" + text + "'");
}

std::string dim_kind_to_config(DimKind kind) {
  switch (kind) {
    case DimKind::continuous_positive: return "continuous";
    case DimKind::integer_count: return "integer";
    case DimKind::simplex_weight: return "simplex";
  }
  return "?";
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  const toml::Value root = toml::parse_file(path);
  std::set<std::string> seen;
  const TableView top(&root, "", &seen);

  ExperimentConfig cfg;

  const TableView run = top.sub("run");
  {
    const std::string task = run.get_string("task", "fl");
    if (task == "fl") {
      cfg.task = RunTask::fl;
    } else if (task == "bandit") {
      cfg.task = RunTask::bandit;
    } else {
      throw ConfigError("'run.task' must be fl or bandit, got '" + task + "'");
    }
    cfg.rounds = run.get_int("rounds", 1);
    cfg.clients = static_cast<std::size_t>(run.get_int("clients", 2));
    const std::int64_t seed = run.get_int("seed", 0);
    if (seed < 0) throw ConfigError("'run.seed' must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.out_dir = run.get_string("out", "runs/out");
  }

  const TableView data = top.sub("data");
  cfg.data.n_samples = static_cast<std::size_t>(data.get_int("n_samples", 0));
  cfg.data.d_in = static_cast<std::size_t>(data.get_int("d_in", 0));
  cfg.data.classes = static_cast<int>(data.get_int("classes", 0));
  cfg.data.cluster_spread = data.get_double("cluster_spread", 1.0);
  cfg.data.domain_shift = data.get_double("domain_shift", 0.0);
  cfg.data.dirichlet_alpha = data.get_double("dirichlet_alpha", 0.5);
  cfg.data.size_weights = data.get_double_array("size_weights");
  cfg.data.csv_path = data.get_string("csv", "");
  {
    const std::vector<double> split = data.get_double_array("split");
    if (!split.empty()) {
      if (split.size() != 3) throw ConfigError("'data.split' must have 3 entries (train, val, test)");
      cfg.data.split = {split[0], split[1], split[2]};
    }
  }

  const TableView model = top.sub("model");
  cfg.model.kind = model_kind_from_string(model.get_string("kind", "softmax-regression"));
  cfg.model.hidden = static_cast<std::size_t>(model.get_int("hidden", 16));
  // d_in and classes are bound to the dataset by the orchestrator.

  const TableView agent = top.sub("agent");
  cfg.agent.mode = search_mode_from_string(agent.get_string("mode", "continuous"));
  cfg.agent.gamma_h = agent.get_double("gamma_h", 1e-2);
  cfg.agent.window = static_cast<int>(agent.get_int("window", 10));
  cfg.agent.sign = update_sign_from_string(agent.get_string("sign", "ascent"));
  cfg.agent.sigma_floor = agent.get_double("sigma_floor", 1e-3);
  cfg.agent.init_sigma = agent.get_double("init_sigma", 0.5);
  cfg.agent.mlp_hidden = static_cast<std::size_t>(agent.get_int("mlp_hidden", 32));
  cfg.agent.discrete.cardinality_cap =
      static_cast<std::uint64_t>(agent.get_int("cardinality_cap", 50'000'000));

  const TableView train = top.sub("train");
  cfg.train.learning_rate = train.get_double("learning_rate", 1e-2);
  cfg.train.iterations = train.get_int("iterations", 10);
  cfg.train.batch_size = train.get_int("batch_size", 64);
  cfg.train.server_lr = train.get_double("server_lr", 1.0);

  const TableView baseline = top.sub("baseline");
  {
    const std::string kind = baseline.get_string("kind", "fedavg");
    if (kind == "fedavg") {
      cfg.baseline.kind = BaselineKind::fedavg;
    } else if (kind == "fedprox") {
      cfg.baseline.kind = BaselineKind::fedprox;
    } else {
      throw ConfigError("'baseline.kind' must be fedavg or fedprox, got '" + kind + "'");
    }
    cfg.baseline.prox_mu = baseline.get_double("prox_mu", 0.0);
  }

  const TableView space = top.sub("space");
  cfg.space.scale = space.get_double("scale", 1.0);
  cfg.space.aggregation_weights = space.get_bool("aggregation_weights", false);
  cfg.space.aw_grid_points = space.get_int("aw_grid_points", 0);
  for (const TableView& dim : space.sub_array("dim")) {
    SpaceDimConfig d;
    d.name = dim.get_string("name", "");
    if (d.name.empty()) throw ConfigError("'" + dim.path() + ".name' is required");
    d.min = dim.get_double("min", 0.0);
    d.max = dim.get_double("max", 0.0);
    d.kind = dim_kind_from_config(dim.get_string("kind", "continuous"), dim.path() + ".kind");
    d.grid_points = dim.get_int("grid_points", 0);
    d.log_scaled = dim.get_bool("log", false);
    if (d.kind == DimKind::simplex_weight && !dim.has("min") && !dim.has("max")) {
      d.min = 0.0;
      d.max = 1.0;
    }
    cfg.space.dims.push_back(std::move(d));
  }

  const TableView bandit = top.sub("bandit");
  cfg.bandit.target = bandit.get_double("target", 0.5);

  check_unknown_keys(root, "", seen);
  validate_config(cfg);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.rounds < 1) throw ConfigError("'run.rounds' must be >= 1");
  if (cfg.out_dir.empty()) throw ConfigError("'run.out' must not be empty");

  if (!(cfg.agent.gamma_h > 0.0)) throw ConfigError("'agent.gamma_h' must be > 0");
  if (cfg.agent.window < 0) throw ConfigError("'agent.window' must be >= 0");
  if (!(cfg.agent.sigma_floor > 0.0)) throw ConfigError("'agent.sigma_floor' must be > 0");
  if (!(cfg.agent.init_sigma >= cfg.agent.sigma_floor)) {
    throw ConfigError("'agent.init_sigma' must be >= agent.sigma_floor");
  }
  if (cfg.agent.mlp_hidden < 1) throw ConfigError("'agent.mlp_hidden' must be >= 1");
  if (cfg.agent.discrete.cardinality_cap < 1) {
    throw ConfigError("'agent.cardinality_cap' must be >= 1");
  }
  if (!(cfg.space.scale > 0.0)) throw ConfigError("'space.scale' must be > 0");

  if (cfg.task == RunTask::bandit) {
    if (cfg.space.dims.size() != 1 || cfg.space.aggregation_weights) {
      throw ConfigError("a bandit run needs exactly one [[space.dim]] and no aggregation weights");
    }
    const SpaceDimConfig& dim = cfg.space.dims[0];
    if (cfg.bandit.target < dim.min || cfg.bandit.target > dim.max) {
      throw ConfigError("'bandit.target' must lie inside the dim range [" +
                        std::to_string(dim.min) + ", " + std::to_string(dim.max) + "]");
    }
    (void)build_space_from_config(cfg);  // surface dim-level problems now
    return;
  }

  if (cfg.clients < 2) throw ConfigError("'run.clients' must be >= 2");

  if (cfg.data.csv_path.empty()) {
    if (cfg.data.n_samples < cfg.clients) {
      throw ConfigError("'data.n_samples' must be >= run.clients");
    }
    if (cfg.data.classes < 2) throw ConfigError("'data.classes' must be >= 2");
    if (cfg.data.d_in < static_cast<std::size_t>(cfg.data.classes)) {
      throw ConfigError("'data.d_in' must be >= data.classes");
    }
    if (!(cfg.data.cluster_spread > 0.0)) throw ConfigError("'data.cluster_spread' must be > 0");
  }
  if (cfg.data.domain_shift < 0.0) throw ConfigError("'data.domain_shift' must be >= 0");
  if (!(cfg.data.dirichlet_alpha > 0.0)) throw ConfigError("'data.dirichlet_alpha' must be > 0");
  if (!cfg.data.size_weights.empty()) {
    if (cfg.data.size_weights.size() != cfg.clients) {
      throw ConfigError("'data.size_weights' must have run.clients entries");
    }
    for (double w : cfg.data.size_weights) {
      if (!(w > 0.0)) throw ConfigError("'data.size_weights' entries must be > 0");
    }
  }
  {
    const SplitFractions& s = cfg.data.split;
    if (!(s.train > 0.0) || !(s.val > 0.0) || !(s.test > 0.0) ||
        std::abs(s.train + s.val + s.test - 1.0) > 1e-9) {
      throw ConfigError("'data.split' fractions must be positive and sum to 1");
    }
  }

  if (cfg.model.kind == ModelKind::mlp_1_hidden && cfg.model.hidden < 1) {
    throw ConfigError("'model.hidden' must be >= 1 for mlp-1-hidden");
  }

  if (!(cfg.train.learning_rate > 0.0)) throw ConfigError("'train.learning_rate' must be > 0");
  if (cfg.train.iterations < 1) throw ConfigError("'train.iterations' must be >= 1");
  if (cfg.train.batch_size < 1) throw ConfigError("'train.batch_size' must be >= 1");
  if (!(cfg.train.server_lr >= 0.0)) throw ConfigError("'train.server_lr' must be >= 0");

  if (cfg.baseline.kind == BaselineKind::fedprox && !(cfg.baseline.prox_mu > 0.0)) {
    throw ConfigError("'baseline.prox_mu' must be > 0 for fedprox");
  }
  if (cfg.baseline.kind == BaselineKind::fedavg && cfg.baseline.prox_mu != 0.0) {
    throw ConfigError("'baseline.prox_mu' must be 0 for fedavg");
  }

  // Dim roles: every searched dim must map onto a training knob.
  for (const SpaceDimConfig& d : cfg.space.dims) {
    const std::string where = "space.dim '" + d.name + "'";
    if (d.name == kDimClientLr || d.name == kDimServerLr) {
      if (d.kind != DimKind::continuous_positive) {
        throw ConfigError(where + " must have kind continuous");
      }
    } else if (d.name == kDimLocalIters) {
      if (d.kind != DimKind::integer_count) throw ConfigError(where + " must have kind integer");
    } else if (d.name.rfind(kDimAggWeightPrefix, 0) == 0) {
      if (cfg.space.aggregation_weights) {
        throw ConfigError(where + " clashes with space.aggregation_weights = true");
      }
      if (d.kind != DimKind::simplex_weight) throw ConfigError(where + " must have kind simplex");
    } else {
      throw ConfigError(where + " has no training role (known: lr, li, slr, aw<k>)");
    }
    if (cfg.agent.mode == SearchMode::discrete && d.grid_points < 2) {
      throw ConfigError(where + " needs grid_points >= 2 for discrete search");
    }
  }
  if (cfg.space.aggregation_weights && cfg.agent.mode == SearchMode::discrete &&
      cfg.space.aw_grid_points < 2) {
    throw ConfigError("'space.aw_grid_points' must be >= 2 for discrete search");
  }
  {
    // Explicit aggregation-weight dims must cover every client, in order, so
    // the sampled values line up with client ids.
    std::vector<std::string> aw_names;
    for (const SpaceDimConfig& d : cfg.space.dims) {
      if (d.name.rfind(kDimAggWeightPrefix, 0) == 0) aw_names.push_back(d.name);
    }
    if (!aw_names.empty()) {
      if (aw_names.size() != cfg.clients) {
        throw ConfigError("aggregation-weight dims must cover all " +
                          std::to_string(cfg.clients) + " clients (found " +
                          std::to_string(aw_names.size()) + ")");
      }
      for (std::size_t k = 0; k < aw_names.size(); ++k) {
        const std::string want = kDimAggWeightPrefix + std::to_string(k);
        if (aw_names[k] != want) {
          throw ConfigError("aggregation-weight dims must be named aw0..aw" +
                            std::to_string(cfg.clients - 1) + " in order; found '" +
                            aw_names[k] + "' where '" + want + "' was expected");
        }
      }
    }
  }
  if (!cfg.space.dims.empty() || cfg.space.aggregation_weights) {
    (void)build_space_from_config(cfg);  // surface dim-level problems now
  }
}

HyperparamSpace build_space_from_config(const ExperimentConfig& cfg) {
  std::vector<HyperparamDim> dims;
  for (const SpaceDimConfig& d : cfg.space.dims) {
    HyperparamDim h;
    h.name = d.name;
    h.raw_min = d.min;
    h.raw_max = d.max;
    h.kind = d.kind;
    h.grid_points = static_cast<int>(d.grid_points);
    h.log_scaled = d.log_scaled;
    dims.push_back(std::move(h));
  }
  if (cfg.space.aggregation_weights) {
    for (std::size_t k = 0; k < cfg.clients; ++k) {
      HyperparamDim h;
      h.name = kDimAggWeightPrefix + std::to_string(k);
      h.raw_min = 0.0;
      h.raw_max = 1.0;
      h.kind = DimKind::simplex_weight;
      h.grid_points = static_cast<int>(cfg.space.aw_grid_points);
      h.log_scaled = false;
      dims.push_back(std::move(h));
    }
  }
  return build_space(dims, cfg.space.scale);
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["run"] = {{"task", to_string(cfg.task)},
              {"rounds", cfg.rounds},
              {"clients", cfg.clients},
              {"seed", cfg.seed},
              {"out", cfg.out_dir}};
  j["data"] = {{"n_samples", cfg.data.n_samples},
               {"d_in", cfg.data.d_in},
               {"classes", cfg.data.classes},
               {"cluster_spread", cfg.data.cluster_spread},
               {"domain_shift", cfg.data.domain_shift},
               {"dirichlet_alpha", cfg.data.dirichlet_alpha},
               {"split", {cfg.data.split.train, cfg.data.split.val, cfg.data.split.test}}};
  if (!cfg.data.size_weights.empty()) j["data"]["size_weights"] = cfg.data.size_weights;
  if (!cfg.data.csv_path.empty()) j["data"]["csv"] = cfg.data.csv_path;
  j["model"] = {{"kind", to_string(cfg.model.kind)}, {"hidden", cfg.model.hidden}};
  j["agent"] = {{"mode", to_string(cfg.agent.mode)},
                {"gamma_h", cfg.agent.gamma_h},
                {"window", cfg.agent.window},
                {"sign", to_string(cfg.agent.sign)},
                {"sigma_floor", cfg.agent.sigma_floor},
                {"init_sigma", cfg.agent.init_sigma},
                {"mlp_hidden", cfg.agent.mlp_hidden},
                {"cardinality_cap", cfg.agent.discrete.cardinality_cap}};
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"iterations", cfg.train.iterations},
                {"batch_size", cfg.train.batch_size},
                {"server_lr", cfg.train.server_lr}};
  j["baseline"] = {{"kind", to_string(cfg.baseline.kind)}, {"prox_mu", cfg.baseline.prox_mu}};
  nlohmann::json dims = nlohmann::json::array();
  for (const SpaceDimConfig& d : cfg.space.dims) {
    dims.push_back({{"name", d.name},
                    {"min", d.min},
                    {"max", d.max},
                    {"kind", dim_kind_to_config(d.kind)},
                    {"grid_points", d.grid_points},
                    {"log", d.log_scaled}});
  }
  j["space"] = {{"scale", cfg.space.scale},
                {"aggregation_weights", cfg.space.aggregation_weights},
                {"aw_grid_points", cfg.space.aw_grid_points},
                {"dim", std::move(dims)}};
  if (cfg.task == RunTask::bandit) j["bandit"] = {{"target", cfg.bandit.target}};
  return j;
}

}  // namespace fedsim
