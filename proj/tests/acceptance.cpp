// Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <thread>
#include <vector>

#include <fmt/core.h>

#include "lanneal/experiments.hpp"

namespace fs = std::filesystem;
using namespace lanneal;

namespace {

std::string results[11];

void report(int k, bool ok, const std::string& detail) {
  results[k] = fmt::format("{} criterion {}: {}", ok ? "PASS" : "FAIL", k, detail);
  fmt::print("  {}\n", results[k]);
  std::fflush(stdout);
}

void guarded(int k, const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body();
  } catch (const std::exception& e) {
    report(k, false, fmt::format("exception: {}", e.what()));
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fmt::print("  (criterion {} took {:.1f} s)\n", k, sec);
}

std::size_t threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// Criteria 1 and 4 share the default study.
void dichotomy_and_moments() {
  StudyReport r;
  guarded(1, [&] {
    r = run_dichotomy_study(ExperimentConfig{}, threads());
    const double ps = r.slow.ensemble.p_hat.back(), pf = r.fast.ensemble.p_hat.back();
    const Interval ws = r.slow.ensemble.wilson.back(), wf = r.fast.ensemble.wilson.back();
    const bool ok = ps >= 0.9 && pf <= ps - 0.2 && wf.hi < ws.lo;
    report(1, ok,
           fmt::format("slow p_hat={:.4f} [{:.4f},{:.4f}] (need >= 0.9), fast p_hat={:.4f} [{:.4f},{:.4f}]; "
                       "verdicts slow_converges={} fast_traps={}",
                       ps, ws.lo, ws.hi, pf, wf.lo, wf.hi, r.slow_converges, r.fast_traps));
  });
  guarded(4, [&] {
    if (r.slow_moments.samples.empty()) throw std::runtime_error("slow arm did not run");
    const double a = r.slow_moments.exponent;
    report(4, a <= 0.2, fmt::format("fitted exponent of E[U - min U + |Y|^2] on [1e2, 1e5] = {:.4f} (need <= 0.2)", a));
  });
}

void gibbs_fidelity() {
  guarded(2, [] {
    const auto model = builtin::quadratic(1, 0.5);  // U = x^2/2
    const auto sched = CoolingSchedule::constant(0.5);
    const auto var = VarianceMap::constant(1.0, 1.0);
    const double dt = 1e-2;
    const CounterNoise noise(20240607, 0);
    PhaseState z{{0.0}, {0.0}, 0.0};
    const std::uint64_t burn = 10000, n = 1000000;
    double sx = 0, sxx = 0, sy = 0, syy = 0;
    for (std::uint64_t k = 0; k < burn + n; ++k) {
      const StepResult s = step_kinetic(z, model, sched, var, dt, noise, k, 1e6, Scheme::splitting);
      if (s.diverged) throw std::runtime_error("trajectory diverged");
      z = s.state;
      if (k >= burn) {
        sx += z.x[0];
        sxx += z.x[0] * z.x[0];
        sy += z.y[0];
        syy += z.y[0] * z.y[0];
      }
    }
    const double N = static_cast<double>(n);
    const double vx = sxx / N - (sx / N) * (sx / N), vy = syy / N - (sy / N) * (sy / N);
    report(2, std::abs(vx - 0.5) <= 0.02 && std::abs(vy - 1.0) <= 0.02,
           fmt::format("Var(x)={:.4f} (0.5 +- 0.02), Var(y)={:.4f} (1 +- 0.02)", vx, vy));
  });
}

void lyapunov() {
  guarded(3, [] {
    ExperimentConfig cfg;
    cfg.lyapunov.suite = true;
    bool ok = true;
    std::string worst;
    for (const auto& e : run_lyapunov_study(cfg)) {
      const auto& r = e.report;
      const bool good = r.rho_hat > 0.0 && std::isfinite(r.N_hat) && r.sandwich_ok;
      ok = ok && good;
      if (!good) worst += fmt::format(" {}@{}", e.potential, r.eps);
    }
    report(3, ok, ok ? "witness and sandwich on all built-in potentials at eps 1, 0.5, 0.1"
                     : "no witness or sandwich violated for" + worst);
  });
}

void entropy_and_pinsker() {
  DecayReport r;
  guarded(5, [&] {
    r = run_fokker_planck_study(ExperimentConfig{});
    const auto& s = r.series;
    const double H0 = s.front().suite.H, HT = s.back().suite.H;
    bool mono = true;
    for (std::size_t k = s.size() / 2 + 1; k < s.size(); ++k) {
      if (s[k].suite.H > 1.01 * s[k - 1].suite.H) mono = false;
    }
    report(5, HT <= 0.05 * H0 && mono,
           fmt::format("H(0)={:.6g} H(T)={:.6g} ratio={:.4f} (need <= 0.05); tail non-increasing within 1%: {}; "
                       "fitted exponent {:.3f}",
                       H0, HT, HT / H0, mono ? "yes" : "no", r.fitted_exponent));
  });
  guarded(6, [&] {
    if (r.series.empty()) throw std::runtime_error("Fokker-Planck run did not complete");
    double worst = -1e300;
    for (const auto& p : r.series) worst = std::max(worst, p.suite.L1 - std::sqrt(2.0 * p.suite.Ent));
    report(6, worst <= 1e-12,
           fmt::format("max over {} checkpoints of L1 - sqrt(2 Ent) = {:.3e} (need <= 1e-12)", r.series.size(), worst));
  });
}

void gamma() {
  guarded(7, [] {
    const GammaStudy s = run_gamma_study(ExperimentConfig{});
    std::size_t bad = 0, lemma_bad = 0;
    for (const auto& e : s.entries) bad += e.report.interior_pass ? 0 : 1;
    for (const auto& q : s.quadratic_lemma) lemma_bad += q.pass ? 0 : 1;
    report(7, bad == 0 && lemma_bad == 0,
           fmt::format("{} functional checks failed of {}; quadratic lemma failed {} of {}", bad, s.entries.size(),
                       lemma_bad, s.quadratic_lemma.size()));
  });
}

void gibbs_tail_check() {
  guarded(8, [] {
    const auto model = builtin::tilted_double_well(0.3);
    const LandscapeFacts f = landscape_facts(model);
    const double delta = 0.1 * f.gap;
    std::vector<double> v;
    for (double eps : {0.5, 0.25, 0.125}) {
      const GibbsTail t = gibbs_tail(model, eps, delta, model.default_grid());
      v.push_back(eps * std::log(t.scaled_tail));
    }
    const bool ok = v[1] <= v[0] && v[2] <= v[1] && v[2] <= v[0];
    report(8, ok, fmt::format("eps*ln(scaled tail) at eps 0.5, 0.25, 0.125 = {:.5f}, {:.5f}, {:.5f} "
                              "(need non-increasing)",
                              v[0], v[1], v[2]));
  });
}

void steering() {
  guarded(9, [] {
    const auto model = builtin::tilted_double_well(0.3);
    const LandscapeFacts f = landscape_facts(model);
    const auto sched = CoolingSchedule::logarithmic(1.5 * *f.E_star);
    const auto var = VarianceMap::identity();
    const CounterNoise noise(20240607, 99);
    bool ok = true;
    double worst = 0.0;
    for (std::uint64_t p = 0; p < 5; ++p) {
      auto u = [&](std::uint32_t k) { return noise.uniform(p, k); };
      const PhaseState z0{{-1.5 + 3.0 * u(0)}, {-1.0 + 2.0 * u(1)}, 0.0};
      const PhaseState z1{{-1.5 + 3.0 * u(2)}, {-1.0 + 2.0 * u(3)}, 0.0};
      double prev = 1e300;
      for (double d : {1e-1, 1e-2, 1e-3}) {
        const double e = steering_control(z0, z1, 1.0, d, model, sched, var).endpoint_error;
        if (!(e < prev)) ok = false;
        if (d == 1e-2) {
          worst = std::max(worst, e);
          if (e > 1e-2) ok = false;
        }
        prev = e;
      }
    }
    report(9, ok, fmt::format("worst endpoint error at delta_ctrl=1e-2 over 5 pairs = {:.3e}; monotone in delta_ctrl: {}",
                              worst, ok ? "yes" : "see above"));
  });
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism() {
  guarded(10, [] {
    const fs::path root = fs::temp_directory_path() / "lanneal_acceptance_det";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg = root / "config.json";
    {
      std::ofstream out(cfg);
      out << R"({"trial": {"T_final": 300, "n_checkpoints": 9}, "ensemble": {"n": 150, "master_seed": 31337}})";
    }
    std::size_t compared = 0;
    bool same = true;
    for (const char* cmd : {"dichotomy", "ensemble", "compare-baseline"}) {
      for (int t : {1, 8}) {
        const std::string line = fmt::format("\"{}\" {} --config \"{}\" --threads {} --out \"{}\" > /dev/null",
                                             LANNEAL_CLI_PATH, cmd, cfg.string(), t,
                                             (root / fmt::format("{}_{}", cmd, t)).string());
        if (std::system(line.c_str()) != 0) throw std::runtime_error("CLI failed: " + line);
      }
      const fs::path a = root / fmt::format("{}_1", cmd), b = root / fmt::format("{}_8", cmd);
      for (const auto& e : fs::directory_iterator(a)) {
        ++compared;
        if (!fs::exists(b / e.path().filename()) || slurp(e.path()) != slurp(b / e.path().filename())) same = false;
      }
    }
    report(10, same && compared > 0,
           fmt::format("{} output files compared between --threads 1 and --threads 8: {}", compared,
                       same ? "byte-identical" : "DIFFERENT"));
  });
}

}  // namespace

int main() {
  fmt::print("acceptance run on {} hardware threads\n", threads());
  dichotomy_and_moments();
  gibbs_fidelity();
  lyapunov();
  entropy_and_pinsker();
  gamma();
  gibbs_tail_check();
  steering();
  determinism();
  int failures = 0;
  fmt::print("\n");
  for (int k = 1; k <= 10; ++k) {
    if (results[k].empty()) results[k] = fmt::format("FAIL criterion {}: not evaluated", k);
    if (results[k].rfind("PASS", 0) != 0) ++failures;
    fmt::print("{}\n", results[k]);
  }
  fmt::print("{} of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
