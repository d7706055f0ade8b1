#include "vinestep/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <fstream>
#include <iostream>
#include <set>
#include <stdexcept>

#include "vinestep/diffvine.hpp"
#include "vinestep/estimate.hpp"
#include "vinestep/io.hpp"
#include "vinestep/parallel.hpp"
#include "vinestep/rng.hpp"
#include "vinestep/simstudy.hpp"
#include "vinestep/validate.hpp"

namespace vinestep {

namespace {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A flag whose raw string value(s) are overlaid onto the JSON config.
struct Flag {
  std::string key;
  bool list = false;
  bool is_switch = false;
  std::vector<std::string> values;
  bool on = false;
  CLI::Option* opt = nullptr;
};

class Subcommand {
 public:
  Subcommand(CLI::App& app, std::string name, std::string help) : name_(std::move(name)) {
    cmd_ = app.add_subcommand(name_, std::move(help));
    cmd_->add_option("--config", config_path_, "JSON config file; flags override its values");
    add("--out", "out", "Output file");
    add("--threads", "threads", "Worker thread cap (default: VINESTEP_THREADS or all cores)");
  }

  Subcommand& add(const std::string& flag, const std::string& key, const std::string& help) {
    Flag& f = flags_.emplace_back();
    f.key = key;
    f.opt = cmd_->add_option(flag, f.values, help)->expected(1);
    return *this;
  }
  Subcommand& add_list(const std::string& flag, const std::string& key, const std::string& help) {
    Flag& f = flags_.emplace_back();
    f.key = key;
    f.list = true;
    f.opt = cmd_->add_option(flag, f.values, help)->expected(1, 1 << 20)->delimiter(',');
    return *this;
  }
  Subcommand& add_switch(const std::string& flag, const std::string& key, const std::string& help) {
    Flag& f = flags_.emplace_back();
    f.key = key;
    f.is_switch = true;
    f.opt = cmd_->add_flag(flag, f.on, help);
    return *this;
  }

  bool parsed() const { return cmd_->parsed(); }
  const std::string& name() const { return name_; }

  json effective() const {
    json cfg = json::object();
    if (!config_path_.empty()) {
      try {
        cfg = io::read_json(config_path_);
      } catch (const std::exception& e) {
        throw ConfigError("cannot read config '" + config_path_ + "': " + e.what());
      }
      if (!cfg.is_object()) throw ConfigError("config '" + config_path_ + "' is not a JSON object");
    }
    for (const Flag& f : flags_) {
      if (f.opt->count() == 0) continue;
      if (f.is_switch) {
        cfg[f.key] = true;
      } else if (f.list) {
        json arr = json::array();
        for (const auto& v : f.values) arr.push_back(scalar(v));
        cfg[f.key] = arr;
      } else {
        cfg[f.key] = scalar(f.values.back());
      }
    }
    return cfg;
  }

 private:
  static json scalar(const std::string& s) {
    json j = json::parse(s, nullptr, false);
    if (j.is_discarded() || j.is_object() || j.is_array()) return s;
    return j;
  }

  std::string name_;
  CLI::App* cmd_;
  std::string config_path_;
  std::deque<Flag> flags_;
};

// ---- typed access to the effective config ----

const json& need(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) throw ConfigError("missing required setting '" + key + "'");
  return cfg.at(key);
}

std::string get_str(const json& cfg, const std::string& key, const std::string& def = {}) {
  if (!cfg.contains(key)) {
    if (def.empty()) need(cfg, key);
    return def;
  }
  const json& v = cfg.at(key);
  return v.is_string() ? v.get<std::string>() : v.dump();
}

double to_num(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      std::size_t pos = 0;
      const double x = std::stod(v.get<std::string>(), &pos);
      if (pos == v.get<std::string>().size()) return x;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("setting '" + key + "' must be a number");
}

double get_num(const json& cfg, const std::string& key, std::optional<double> def = std::nullopt) {
  if (!cfg.contains(key)) {
    if (!def) need(cfg, key);
    return *def;
  }
  return to_num(cfg.at(key), key);
}

long long get_int(const json& cfg, const std::string& key, std::optional<long long> def = std::nullopt) {
  const double x = get_num(cfg, key, def ? std::optional<double>(static_cast<double>(*def)) : std::nullopt);
  if (x != std::floor(x)) throw ConfigError("setting '" + key + "' must be an integer");
  return static_cast<long long>(x);
}

std::uint64_t get_seed(const json& cfg, std::uint64_t def) {
  if (!cfg.contains("seed")) return def;
  const json& v = cfg.at("seed");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  if (v.is_string()) {
    try {
      return std::stoull(v.get<std::string>());
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("setting 'seed' must be a non-negative integer");
}

std::vector<int> get_int_list(const json& cfg, const std::string& key) {
  const json& v = need(cfg, key);
  std::vector<int> out;
  if (v.is_array()) {
    for (const auto& x : v) out.push_back(static_cast<int>(to_num(x, key)));
  } else {
    out.push_back(static_cast<int>(to_num(v, key)));
  }
  if (out.empty()) throw ConfigError("setting '" + key + "' is empty");
  return out;
}

bool get_bool(const json& cfg, const std::string& key, bool def) {
  if (!cfg.contains(key)) return def;
  const json& v = cfg.at(key);
  if (v.is_boolean()) return v.get<bool>();
  throw ConfigError("setting '" + key + "' must be true or false");
}

template <class F>
auto parse_or_config_error(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ThetaModelSpec get_theta_model(const json& cfg) {
  ThetaModelSpec spec = parse_or_config_error([&] { return ThetaModelSpec::parse(get_str(cfg, "theta_model")); });
  spec.scale = get_num(cfg, "theta_scale", spec.scale);
  return spec;
}

Family get_family(const json& cfg) {
  return parse_or_config_error([&] { return parse_family(get_str(cfg, "family")); });
}

StructureKind get_structure(const json& cfg) {
  return parse_or_config_error([&] { return parse_structure(get_str(cfg, "structure")); });
}

void apply_threads(const json& cfg) {
  if (cfg.contains("threads")) {
    const long long t = get_int(cfg, "threads");
    if (t < 1) throw ConfigError("threads must be at least 1");
    set_thread_count(static_cast<int>(t));
  }
}

void write_sidecar(const std::string& out, const std::string& sub, json cfg) {
  cfg["subcommand"] = sub;
  io::write_json(out + ".config.json", cfg);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

// ---- subcommand bodies (config already validated enough to start) ----

struct Job {
  std::function<void()> run;
};

Job simulate_job(const json& cfg) {
  const std::string out = get_str(cfg, "out");
  const long long n = get_int(cfg, "n");
  if (n < 1) throw ConfigError("n must be at least 1");
  const std::uint64_t seed = get_seed(cfg, 1);
  std::optional<VineModel> model;
  if (cfg.contains("model")) {
    const std::string path = get_str(cfg, "model");
    model = parse_or_config_error([&] {
      try {
        return io::model_from_json(io::read_json(path));
      } catch (const std::invalid_argument&) {
        throw;
      } catch (const std::exception& e) {
        throw std::invalid_argument("cannot load model '" + path + "': " + e.what());
      }
    });
  } else {
    const auto structure = get_structure(cfg);
    const Family family = get_family(cfg);
    const int d = static_cast<int>(get_int(cfg, "d"));
    const int trunc = static_cast<int>(get_int(cfg, "trunc", -1));
    const ThetaModelSpec spec = get_theta_model(cfg);
    model = parse_or_config_error(
        [&] { return VineModel::from_theta_model(build_structure(structure, d, trunc), family, spec); });
  }
  return {[=] {
    const SampleMatrix U = simulate(*model, static_cast<std::size_t>(n), seed);
    io::write_matrix_csv(out, U);
  }};
}

Job fit_job(const json& cfg) {
  const std::string out = get_str(cfg, "out");
  const std::string in = get_str(cfg, "in");
  const auto structure = get_structure(cfg);
  const Family family = get_family(cfg);
  const MarginsMode margins = parse_or_config_error([&] { return parse_margins(get_str(cfg, "margins", "known")); });
  const int trunc = static_cast<int>(get_int(cfg, "trunc", -1));
  const std::string csv = cfg.contains("csv") ? get_str(cfg, "csv") : std::string();
  SampleMatrix data = parse_or_config_error([&] {
    try {
      return io::read_matrix_csv(in);
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw std::invalid_argument(e.what());
    }
  });
  const RVineStructure s =
      parse_or_config_error([&] { return build_structure(structure, static_cast<int>(data.cols()), trunc); });
  return {[=] {
    const SampleMatrix U = margins == MarginsMode::Empirical ? pseudo_obs(data) : data;
    const FitResult fit = stepwise_fit(s, family, U, margins);
    io::write_json(out, io::fit_to_json(fit));
    if (!csv.empty()) io::write_fit_csv(csv, fit);
  }};
}

StudyConfig study_config(const json& cfg) {
  StudyConfig c;
  c.study_id = get_str(cfg, "study_id", "study");
  c.structure = get_structure(cfg);
  c.family = get_family(cfg);
  c.theta_model = get_theta_model(cfg);
  c.d_list = get_int_list(cfg, "d");
  c.n_list = get_int_list(cfg, "n");
  c.replications = static_cast<int>(get_int(cfg, "reps", 0));
  c.margins = parse_or_config_error([&] { return parse_margins(get_str(cfg, "margins", "known")); });
  c.trunc = static_cast<int>(get_int(cfg, "trunc", -1));
  c.seed = get_seed(cfg, 1);
  c.timing = !get_bool(cfg, "no_timing", false);
  if (c.replications < 0) throw ConfigError("reps must be non-negative");
  for (int d : c.d_list) {
    if (d < 2) throw ConfigError("every d must be at least 2");
    if (c.trunc > d - 1) throw ConfigError("trunc exceeds d - 1");
  }
  for (int n : c.n_list)
    if (n < 10) throw ConfigError("every n must be at least 10");
  return c;
}

Job study_job(const json& cfg) {
  const std::string out = get_str(cfg, "out");
  const StudyConfig c = study_config(cfg);
  return {[=] {
    const auto rows = run_study(c);
    auto os = open_out(out);
    io::write_study_csv(os, rows);
  }};
}

struct ValidateSetup {
  StructureKind structure;
  Family family;
  ThetaModelSpec spec;
  std::vector<int> d_list;
  double eps;
  int K;
  long long N;
  std::string alpha;
  std::uint64_t seed;
};

ValidateSetup validate_setup(const json& cfg, int default_k) {
  ValidateSetup v{get_structure(cfg), get_family(cfg), get_theta_model(cfg), get_int_list(cfg, "d"),
                  get_num(cfg, "eps", 0.005), static_cast<int>(get_int(cfg, "K", default_k)),
                  get_int(cfg, "N", 0), get_str(cfg, "alpha", "constant"), get_seed(cfg, 1)};
  if (!(v.eps > 0.0)) throw ConfigError("eps must be positive");
  if (v.K < 1) throw ConfigError("K must be at least 1");
  if (v.N < 0) throw ConfigError("N must be non-negative");
  for (int d : v.d_list)
    if (d < 2) throw ConfigError("every d must be at least 2");
  parse_or_config_error([&] { return AlphaSeq::parse(v.alpha, 1); });
  return v;
}

Job validate_job(const json& cfg, bool a3) {
  const std::string out = get_str(cfg, "out");
  const ValidateSetup v = validate_setup(cfg, a3 ? 50 : 30);
  if (!a3 && v.family != Family::Gaussian) throw ConfigError("validate-mndn supports the gaussian family only");
  return {[=] {
    auto os = open_out(out);
    os << io::kValidateHeader << '\n';
    for (int d : v.d_list) {
      const VineModel model = VineModel::from_theta_model(build_structure(v.structure, d), v.family, v.spec);
      const AlphaSeq alpha = AlphaSeq::parse(v.alpha, d - 1);
      const std::uint64_t seed = derive_seed(v.seed, {static_cast<std::uint64_t>(d)});
      std::string a3_hat, mn2_hat, dn_hat;
      std::size_t N = static_cast<std::size_t>(v.N);
      if (a3) {
        if (N == 0) N = default_n_a3(d);
        a3_hat = io::format_double(estimate_a3(model, v.eps, alpha, v.K, N, seed));
      } else {
        if (N == 0) N = default_n_mn(d);
        const MnDn r = estimate_mndn(model, v.eps, alpha, v.K, N, seed);
        mn2_hat = io::format_double(r.mn2);
        dn_hat = io::format_double(r.dn);
      }
      os << d << ',' << model.param_count() << ',' << v.spec.name() << ',' << alpha.name() << ','
         << io::format_double(v.eps) << ',' << v.K << ',' << N << ',' << seed << ',' << a3_hat << ',' << mn2_hat
         << ',' << dn_hat << '\n';
    }
  }};
}

Job regimes_job(const json& cfg) {
  const std::string out = get_str(cfg, "out");
  std::vector<std::string> inputs;
  const json& in = need(cfg, "in");
  if (in.is_array()) {
    for (const auto& x : in) inputs.push_back(x.is_string() ? x.get<std::string>() : x.dump());
  } else {
    inputs.push_back(get_str(cfg, "in"));
  }
  std::vector<Regime> regimes;
  if (cfg.contains("regime")) {
    const json& r = cfg.at("regime");
    for (const auto& x : r.is_array() ? r : json::array({r}))
      regimes.push_back(parse_or_config_error([&] { return parse_regime(x.get<std::string>()); }));
  } else {
    regimes = {Regime::Linear, Regime::Quadratic, Regime::Cubic};
  }
  std::vector<StudyRow> rows;
  for (const auto& path : inputs) {
    auto part = parse_or_config_error([&] {
      try {
        return io::read_study_csv(path);
      } catch (const std::invalid_argument&) {
        throw;
      } catch (const std::exception& e) {
        throw std::invalid_argument(e.what());
      }
    });
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return {[=] {
    const auto table = mean_maxnorm_table(rows);
    std::set<int> ds;
    for (const auto& [k, v] : table) ds.insert(k.first);
    const Family family = rows.empty() ? Family::Gaussian : rows.front().family;
    auto os = open_out(out);
    os << io::kRegimeHeader << '\n';
    for (Regime r : regimes) {
      for (int d : ds) {
        if (r == Regime::Cubic && family != Family::StudentT && d <= 50) continue;
        const int n = regime_n(r, d, family);
        double e;
        try {
          e = interp_error(table, d, n);
        } catch (const std::invalid_argument&) {
          continue;  // fewer than two sample sizes at this d
        }
        os << regime_name(r) << ',' << d << ',' << n << ','
           << io::format_double(std::sqrt(n / std::log(static_cast<double>(d))) * e) << '\n';
      }
    }
  }};
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"vinestep: stepwise estimation and simulation studies for vine copulas"};
  app.require_subcommand(1);

  std::deque<Subcommand> subs;
  auto& sim = subs.emplace_back(app, "simulate", "Draw a sample from a vine copula model");
  sim.add("--structure", "structure", "cvine | dvine")
      .add("--family", "family", "gaussian | gumbel | student | independence")
      .add("--d", "d", "Dimension")
      .add("--trunc", "trunc", "Truncation level (default d-1)")
      .add("--theta-model", "theta_model", "zero | geometric | harmonic | sqrt-slow")
      .add("--theta-scale", "theta_scale", "Scale of the theta model")
      .add("--model", "model", "Model JSON (instead of structure/family/theta flags)")
      .add("--n", "n", "Sample size")
      .add("--seed", "seed", "Random seed");

  auto& fit = subs.emplace_back(app, "fit", "Stepwise maximum-likelihood fit of a sample");
  fit.add("--in", "in", "Input CSV (U-scale, or X-scale with --margins empirical)")
      .add("--structure", "structure", "cvine | dvine")
      .add("--family", "family", "Pair-copula family for every edge")
      .add("--margins", "margins", "known | empirical")
      .add("--trunc", "trunc", "Truncation level (default d-1)")
      .add("--csv", "csv", "Optional flat per-edge CSV");

  auto& study = subs.emplace_back(app, "study", "Run a simulation-study grid");
  study.add("--study-id", "study_id", "Identifier written to every row")
      .add("--structure", "structure", "cvine | dvine")
      .add("--family", "family", "gaussian | gumbel | student")
      .add("--theta-model", "theta_model", "zero | geometric | harmonic | sqrt-slow")
      .add("--theta-scale", "theta_scale", "Scale of the theta model")
      .add_list("--d", "d", "Dimensions")
      .add_list("--n", "n", "Sample sizes")
      .add("--reps", "reps", "Replications per cell (default 100, 50 for student)")
      .add("--margins", "margins", "known | empirical")
      .add("--trunc", "trunc", "Truncation level (default d-1)")
      .add("--seed", "seed", "Base seed")
      .add_switch("--no-timing", "no_timing", "Write wall_ms = 0 for byte-reproducible output");

  for (const char* name : {"validate-a3", "validate-mndn"}) {
    const bool a3 = std::string(name) == "validate-a3";
    auto& v = subs.emplace_back(app, name, a3 ? "Estimate the curvature statistic" : "Estimate M_n^2 and D_n");
    v.add("--structure", "structure", "cvine | dvine")
        .add("--family", "family", "Pair-copula family")
        .add("--theta-model", "theta_model", "zero | geometric | harmonic | sqrt-slow")
        .add("--theta-scale", "theta_scale", "Scale of the theta model")
        .add_list("--d", "d", "Dimensions")
        .add("--eps", "eps", "Perturbation size (default 0.005)")
        .add("--K", "K", a3 ? "Perturbation draws (default 50)" : "Perturbation draws (default 30)")
        .add("--N", "N", "Monte-Carlo rows (default from d)")
        .add("--alpha", "alpha", "constant | linear | psum")
        .add("--seed", "seed", "Random seed");
  }

  auto& reg = subs.emplace_back(app, "regimes", "Interpolate mean errors along growth regimes");
  reg.add_list("--in", "in", "Study CSV file(s)").add_list("--regime", "regime", "linear | quadratic | cubic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const Subcommand& sub : subs) {
    if (!sub.parsed()) continue;
    Job job;
    json cfg;
    try {
      cfg = sub.effective();
      apply_threads(cfg);
      const std::string& n = sub.name();
      if (n == "simulate") job = simulate_job(cfg);
      else if (n == "fit") job = fit_job(cfg);
      else if (n == "study") job = study_job(cfg);
      else if (n == "validate-a3") job = validate_job(cfg, true);
      else if (n == "validate-mndn") job = validate_job(cfg, false);
      else job = regimes_job(cfg);
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: bad config: " << e.what() << '\n';
      return 2;
    }
    try {
      job.run();
      write_sidecar(get_str(cfg, "out"), sub.name(), cfg);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    return 0;
  }
  return 2;
}

}  // namespace vinestep
