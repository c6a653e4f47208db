#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "lanneal/error.hpp"
#include "lanneal/experiments.hpp"

namespace lanneal {

using nlohmann::json;

namespace {

// Reads fields of one JSON object, keeping defaults for absent keys and
// rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("config section '{}' must be an object", path_));
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(fmt::format("unknown config key '{}{}'", prefix(), key));
    }
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("config key '{}{}' has the wrong type: {}", prefix(), key, e.what()));
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  [[nodiscard]] std::string prefix() const { return path_.empty() ? "" : path_ + "."; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json growth_json(const GrowthConstants& g) {
  return json{{"a1", g.a1}, {"a2", g.a2}, {"M", g.M}, {"r", g.r}};
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json pot{{"name", c.potential.name},
           {"kappa", c.potential.kappa},
           {"c", c.potential.c},
           {"dim", c.potential.dim},
           {"coefficients", c.potential.coefficients},
           {"terms", c.potential.terms},
           {"domain_lo", c.potential.domain_lo},
           {"domain_hi", c.potential.domain_hi},
           {"scan_spacing", c.potential.scan_spacing},
           {"growth", c.potential.growth ? growth_json(*c.potential.growth) : json(nullptr)}};
  return json{
      {"potential", pot},
      {"schedule",
       {{"form", c.schedule.form},
        {"E", c.schedule.E},
        {"E_factor", c.schedule.E_factor},
        {"A", c.schedule.A},
        {"eps", c.schedule.eps},
        {"knots", c.schedule.knots}}},
      {"variance",
       {{"form", c.variance.form}, {"l", c.variance.l}, {"c", c.variance.c}, {"value", c.variance.value}}},
      {"integrator",
       {{"scheme", c.integrator.scheme},
        {"dynamics", c.integrator.dynamics},
        {"dt", c.integrator.dt},
        {"divergence_radius", c.integrator.divergence_radius}}},
      {"trial",
       {{"T_final", c.trial.T_final},
        {"delta", c.trial.delta},
        {"delta_fraction", c.trial.delta_fraction},
        {"n_checkpoints", c.trial.n_checkpoints}}},
      {"init", {{"mode", c.init.mode}, {"x", c.init.x}, {"y", c.init.y}}},
      {"ensemble", {{"n", c.ensemble.n}, {"master_seed", c.ensemble.master_seed}}},
      {"dichotomy", {{"c_slow", c.dichotomy.c_slow}, {"c_fast", c.dichotomy.c_fast}}},
      {"fokker_planck",
       {{"T", c.fokker_planck.T},
        {"nx", c.fokker_planck.nx},
        {"ny", c.fokker_planck.ny},
        {"x_min", c.fokker_planck.x_min},
        {"x_max", c.fokker_planck.x_max},
        {"y_half_width", c.fokker_planck.y_half_width},
        {"dt", c.fokker_planck.dt},
        {"n_checkpoints", c.fokker_planck.n_checkpoints},
        {"snapshots", c.fokker_planck.snapshots}}},
      {"gamma",
       {{"eps", c.gamma.eps},
        {"n_functions", c.gamma.n_functions},
        {"nx", c.gamma.nx},
        {"ny", c.gamma.ny},
        {"x_min", c.gamma.x_min},
        {"x_max", c.gamma.x_max},
        {"y_min", c.gamma.y_min},
        {"y_max", c.gamma.y_max},
        {"safety", c.gamma.safety}}},
      {"lyapunov",
       {{"eps", c.lyapunov.eps},
        {"n_samples", c.lyapunov.n_samples},
        {"y_range", c.lyapunov.y_range},
        {"suite", c.lyapunov.suite}}},
      {"out_dir", c.out_dir},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Section root(j, "");
  if (const json* p = root.child("potential")) {
    Section s(*p, "potential");
    s.get("name", c.potential.name);
    s.get("kappa", c.potential.kappa);
    s.get("c", c.potential.c);
    s.get("dim", c.potential.dim);
    s.get("coefficients", c.potential.coefficients);
    s.get("terms", c.potential.terms);
    s.get("domain_lo", c.potential.domain_lo);
    s.get("domain_hi", c.potential.domain_hi);
    s.get("scan_spacing", c.potential.scan_spacing);
    if (const json* g = s.child("growth"); g && !g->is_null()) {
      Section gs(*g, "potential.growth");
      GrowthConstants gc;
      gs.get("a1", gc.a1);
      gs.get("a2", gc.a2);
      gs.get("M", gc.M);
      gs.get("r", gc.r);
      c.potential.growth = gc;
    }
  }
  if (const json* p = root.child("schedule")) {
    Section s(*p, "schedule");
    s.get("form", c.schedule.form);
    s.get("E", c.schedule.E);
    s.get("E_factor", c.schedule.E_factor);
    s.get("A", c.schedule.A);
    s.get("eps", c.schedule.eps);
    s.get("knots", c.schedule.knots);
  }
  if (const json* p = root.child("variance")) {
    Section s(*p, "variance");
    s.get("form", c.variance.form);
    s.get("l", c.variance.l);
    s.get("c", c.variance.c);
    s.get("value", c.variance.value);
  }
  if (const json* p = root.child("integrator")) {
    Section s(*p, "integrator");
    s.get("scheme", c.integrator.scheme);
    s.get("dynamics", c.integrator.dynamics);
    s.get("dt", c.integrator.dt);
    s.get("divergence_radius", c.integrator.divergence_radius);
  }
  if (const json* p = root.child("trial")) {
    Section s(*p, "trial");
    s.get("T_final", c.trial.T_final);
    s.get("delta", c.trial.delta);
    s.get("delta_fraction", c.trial.delta_fraction);
    s.get("n_checkpoints", c.trial.n_checkpoints);
  }
  if (const json* p = root.child("init")) {
    Section s(*p, "init");
    s.get("mode", c.init.mode);
    s.get("x", c.init.x);
    s.get("y", c.init.y);
  }
  if (const json* p = root.child("ensemble")) {
    Section s(*p, "ensemble");
    s.get("n", c.ensemble.n);
    s.get("master_seed", c.ensemble.master_seed);
  }
  if (const json* p = root.child("dichotomy")) {
    Section s(*p, "dichotomy");
    s.get("c_slow", c.dichotomy.c_slow);
    s.get("c_fast", c.dichotomy.c_fast);
  }
  if (const json* p = root.child("fokker_planck")) {
    Section s(*p, "fokker_planck");
    s.get("T", c.fokker_planck.T);
    s.get("nx", c.fokker_planck.nx);
    s.get("ny", c.fokker_planck.ny);
    s.get("x_min", c.fokker_planck.x_min);
    s.get("x_max", c.fokker_planck.x_max);
    s.get("y_half_width", c.fokker_planck.y_half_width);
    s.get("dt", c.fokker_planck.dt);
    s.get("n_checkpoints", c.fokker_planck.n_checkpoints);
    s.get("snapshots", c.fokker_planck.snapshots);
  }
  if (const json* p = root.child("gamma")) {
    Section s(*p, "gamma");
    s.get("eps", c.gamma.eps);
    s.get("n_functions", c.gamma.n_functions);
    s.get("nx", c.gamma.nx);
    s.get("ny", c.gamma.ny);
    s.get("x_min", c.gamma.x_min);
    s.get("x_max", c.gamma.x_max);
    s.get("y_min", c.gamma.y_min);
    s.get("y_max", c.gamma.y_max);
    s.get("safety", c.gamma.safety);
  }
  if (const json* p = root.child("lyapunov")) {
    Section s(*p, "lyapunov");
    s.get("eps", c.lyapunov.eps);
    s.get("n_samples", c.lyapunov.n_samples);
    s.get("y_range", c.lyapunov.y_range);
    s.get("suite", c.lyapunov.suite);
  }
  root.get("out_dir", c.out_dir);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config file '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
  // Output location is not semantic.
  nlohmann::json j = to_json(cfg);
  j.erase("out_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

PotentialModel build_potential(const PotentialSpec& spec) {
  if (spec.name == "quadratic") return builtin::quadratic(spec.dim, spec.c);
  if (spec.name == "tilted_double_well") return builtin::tilted_double_well(spec.kappa);
  if (spec.name == "triple_well") return builtin::triple_well(spec.kappa);
  if (spec.name == "two_well_2d") return builtin::two_well_2d(spec.kappa);
  if (spec.name == "polynomial") {
    std::vector<Polynomial::Term> terms;
    std::size_t dim = spec.dim;
    if (!spec.coefficients.empty()) {
      if (!spec.terms.empty()) throw ConfigError("give either potential.coefficients or potential.terms, not both");
      dim = 1;
      for (std::size_t k = 0; k < spec.coefficients.size(); ++k) {
        terms.push_back({spec.coefficients[k], {static_cast<int>(k), 0}});
      }
    } else {
      if (spec.terms.empty()) throw ConfigError("polynomial potential needs coefficients or terms");
      for (const auto& t : spec.terms) {
        if (t[1] < 0 || t[2] < 0 || t[1] != std::floor(t[1]) || t[2] != std::floor(t[2])) {
          throw ConfigError("polynomial powers must be non-negative integers");
        }
        terms.push_back({t[0], {static_cast<int>(t[1]), static_cast<int>(t[2])}});
      }
    }
    if (spec.domain_lo.size() != dim || spec.domain_hi.size() != dim) {
      throw ConfigError("potential.domain_lo/domain_hi must match the polynomial dimension");
    }
    return builtin::polynomial(dim, std::move(terms), Box{spec.domain_lo, spec.domain_hi}, spec.growth);
  }
  throw ConfigError(fmt::format("unknown potential '{}'", spec.name));
}

VarianceMap build_variance(const VarianceSpec& spec) {
  if (spec.form == "identity") return VarianceMap::identity();
  if (spec.form == "affine") return VarianceMap::affine(spec.l, spec.c);
  if (spec.form == "constant") return VarianceMap::constant(spec.value, spec.l);
  throw ConfigError(fmt::format("unknown variance form '{}'", spec.form));
}

CoolingSchedule build_schedule(const ScheduleSpec& spec, std::optional<double> E_star) {
  double E = spec.E;
  if (spec.form != "constant" && E == 0.0) {
    if (!E_star) throw ConfigError("schedule.E = 0 asks for E_factor * E*, but the potential has no E*");
    if (!(spec.E_factor > 0.0)) throw ConfigError("schedule.E_factor must be positive");
    E = spec.E_factor * *E_star;
  }
  if (spec.form == "logarithmic") return CoolingSchedule::logarithmic(E, spec.A);
  if (spec.form == "constant") return CoolingSchedule::constant(spec.eps);
  if (spec.form == "table") {
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : spec.knots) knots.emplace_back(k[0], k[1]);
    return CoolingSchedule::table(std::move(knots), E);
  }
  throw ConfigError(fmt::format("unknown schedule form '{}'", spec.form));
}

Scheme parse_scheme(const std::string& s) {
  if (s == "splitting") return Scheme::splitting;
  if (s == "euler_maruyama") return Scheme::euler_maruyama;
  throw ConfigError(fmt::format("unknown integrator scheme '{}'", s));
}

Dynamics parse_dynamics(const std::string& s) {
  if (s == "kinetic") return Dynamics::kinetic;
  if (s == "overdamped") return Dynamics::overdamped;
  throw ConfigError(fmt::format("unknown dynamics '{}'", s));
}

}  // namespace lanneal
