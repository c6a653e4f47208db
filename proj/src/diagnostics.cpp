#include "lanneal/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <boost/random/sobol.hpp>
#include <fmt/core.h>

#include "lanneal/error.hpp"

namespace lanneal {

LyapunovParams LyapunovParams::from(const PotentialModel& model, const VarianceMap& var) {
  if (!model.growth()) throw ConfigError(fmt::format("potential '{}' has no growth constants", model.name()));
  const GrowthConstants& g = *model.growth();
  return LyapunovParams{g.a1, var.l(), g.r, g.M};
}

double LyapunovParams::delta(double eps, double sigma) const noexcept {
  return 1.0 / (4.0 * (1.0 + 1.0 / std::sqrt(a1 * l)) * (1.0 + eps / (2.0 * r * sigma * sigma * sigma)));
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void check_phase_point(const PotentialModel& model, std::span<const double> x, std::span<const double> y) {
  if (x.size() != model.dim() || y.size() != model.dim()) throw ConfigError("phase point has the wrong dimension");
}

}  // namespace

double lyapunov_value(const LyapunovParams& p, const PotentialModel& model, const VarianceMap& var, double eps,
                      std::span<const double> x, std::span<const double> y) {
  check_phase_point(model, x, y);
  const double sigma = var.sigma(eps);
  return sigma / eps * model.energy(x) + 0.5 * dot(y, y) + p.delta(eps, sigma) * dot(x, y);
}

double lyapunov_generator(const LyapunovParams& p, const PotentialModel& model, const VarianceMap& var, double eps,
                          std::span<const double> x, std::span<const double> y) {
  check_phase_point(model, x, y);
  const double sigma = var.sigma(eps);
  const double s = sigma / eps;
  const double delta = p.delta(eps, sigma);
  std::vector<double> g(model.dim());
  model.gradient(x, g);
  const double y2 = dot(y, y);
  return delta * y2 - y2 / sigma - delta / sigma * dot(x, y) - s * delta * dot(g, x) +
         static_cast<double>(model.dim());
}

LyapunovReport check_lyapunov_drift(const PotentialModel& model, const VarianceMap& var, double eps, std::size_t n,
                                    double y_range, const Box* x_box) {
  if (!(eps > 0.0)) throw ConfigError("drift check needs eps > 0");
  if (n < 16) throw ConfigError("drift check needs at least 16 samples");
  if (!(y_range > 0.0)) throw ConfigError("velocity sample range must be positive");
  const LyapunovParams params = LyapunovParams::from(model, var);
  const Box box = x_box ? *x_box : model.domain();
  const std::size_t d = model.dim();
  if (box.dim() != d) throw ConfigError("sample box dimension does not match the potential");

  LyapunovReport rep;
  rep.eps = eps;
  rep.sigma = var.sigma(eps);
  rep.delta = params.delta(eps, rep.sigma);
  const double s = rep.sigma / eps;

  // Sample points: the box centre first, then a Sobol sequence over the box.
  std::vector<double> LR, R, U, Y2;
  std::vector<Point> xs, ys;
  boost::random::sobol qrng(2 * d);
  auto push = [&](Point x, Point y) {
    LR.push_back(lyapunov_generator(params, model, var, eps, x, y));
    R.push_back(lyapunov_value(params, model, var, eps, x, y));
    U.push_back(model.energy(x));
    Y2.push_back(dot(y, y));
    xs.push_back(std::move(x));
    ys.push_back(std::move(y));
  };
  {
    Point x(d), y(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) x[k] = 0.5 * (box.lo[k] + box.hi[k]);
    push(std::move(x), std::move(y));
  }
  for (std::size_t m = 1; m < n; ++m) {
    Point x(d), y(d);
    for (std::size_t k = 0; k < 2 * d; ++k) {
      const double u = static_cast<double>(qrng() >> 11) * 0x1p-53;
      if (k < d) x[k] = box.lo[k] + u * (box.hi[k] - box.lo[k]);
      else y[k - d] = -y_range + 2.0 * y_range * u;
    }
    push(std::move(x), std::move(y));
  }
  rep.samples = LR.size();

  auto inside_core = [&](std::size_t m) {
    for (std::size_t k = 0; k < d; ++k) {
      const double c = 0.5 * (box.lo[k] + box.hi[k]), w = 0.45 * (box.hi[k] - box.lo[k]);
      if (std::abs(xs[m][k] - c) > w) return false;
      if (std::abs(ys[m][k]) > 0.9 * y_range) return false;
    }
    return true;
  };

  constexpr std::size_t kCandidates = 32;
  bool found = false;
  for (std::size_t c = kCandidates; c-- > 0;) {
    const double rho = std::exp(std::log(1e-6) + (std::log(10.0) - std::log(1e-6)) * static_cast<double>(c) /
                                                     static_cast<double>(kCandidates - 1));
    std::size_t arg = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < LR.size(); ++m) {
      const double v = LR[m] + rho * eps * eps * R[m];
      if (v > best) {
        best = v;
        arg = m;
      }
    }
    if (inside_core(arg)) {
      rep.rho_hat = rho;
      rep.max_drift = best;
      rep.N_hat = best * eps / rep.sigma;
      rep.argmax_x = xs[arg];
      rep.argmax_y = ys[arg];
      found = true;
      break;
    }
  }
  if (!found) {
    throw NumericalError(
        fmt::format("drift inequality has no interior witness for any rho in [1e-6, 10] at eps = {:.6g}", eps));
  }

  rep.c = std::min(params.l / 2.0, 0.25);
  rep.C = 1.0 + params.l / s;
  rep.N_sandwich = 2.0 * (s + params.l) * params.M;
  for (std::size_t m = 0; m < R.size(); ++m) {
    const double lo = rep.c * (U[m] + Y2[m]) - rep.N_sandwich;
    const double hi = rep.C * (s * U[m] + Y2[m]) + rep.N_sandwich;
    if (R[m] < lo || R[m] > hi) ++rep.sandwich_violations;
  }
  rep.sandwich_ok = rep.sandwich_violations == 0;
  return rep;
}

double fit_growth_exponent(const std::vector<MomentSample>& samples, double t_min) {
  if (samples.size() < 4) throw ConfigError("growth fit needs at least 4 checkpoints");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = samples.size() / 2; k < samples.size(); ++k) {
    const auto& s = samples[k];
    if (s.t >= t_min && s.estimate > 0.0) pts.emplace_back(std::log1p(s.t), std::log(s.estimate));
  }
  if (pts.size() < 2) throw ConfigError("growth fit has fewer than 2 usable tail checkpoints");
  double mx = 0.0, my = 0.0;
  for (const auto& [a, b] : pts) {
    mx += a;
    my += b;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [a, b] : pts) {
    sxy += (a - mx) * (b - my);
    sxx += (a - mx) * (a - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

MomentSeries track_moments(const std::vector<TrialReport>& trials, int p, double min_U, double t_min) {
  if (p < 1) throw ConfigError("moment order must be at least 1");
  if (trials.empty()) throw ConfigError("moment tracking needs at least one trial");
  std::size_t n_ck = 0;
  for (const auto& tr : trials) n_ck = std::max(n_ck, tr.checkpoints.size());
  if (n_ck < 4) throw ConfigError("moment tracking needs at least 4 checkpoints");

  MomentSeries series;
  series.p = p;
  series.shift = min_U;
  for (std::size_t k = 0; k < n_ck; ++k) {
    double sum = 0.0, sum2 = 0.0, t = 0.0;
    std::size_t count = 0;
    for (const auto& tr : trials) {
      if (k >= tr.checkpoints.size()) continue;
      const Checkpoint& c = tr.checkpoints[k];
      const double v = std::pow(std::max(c.U - min_U, 0.0) + c.y2, p);
      sum += v;
      sum2 += v * v;
      t = c.t;
      ++count;
    }
    MomentSample s;
    s.t = t;
    s.count = count;
    s.estimate = sum / static_cast<double>(count);
    if (count > 1) {
      const double var = std::max(sum2 / static_cast<double>(count) - s.estimate * s.estimate, 0.0);
      s.std_error = std::sqrt(var / static_cast<double>(count - 1));
    }
    if (!series.samples.empty() && !(s.t > series.samples.back().t)) {
      throw ConfigError("checkpoint times are not strictly increasing");
    }
    series.samples.push_back(s);
  }
  series.exponent = fit_growth_exponent(series.samples, t_min);
  return series;
}

GibbsTail gibbs_tail(const PotentialModel& model, double eps, double delta, const GridSpec& quad) {
  const std::size_t d = model.dim();
  if (d != 1 && d != 2) throw ConfigError("Gibbs quadrature supports d = 1 or 2");
  if (quad.box.dim() != d) throw ConfigError("quadrature box dimension does not match the potential");
  if (!(eps > 0.0)) throw ConfigError("Gibbs quadrature needs eps > 0");
  if (!(delta >= 0.0)) throw ConfigError("tail depth delta must be non-negative");
  if (!(quad.spacing > 0.0)) throw ConfigError("quadrature spacing must be positive");

  std::vector<std::size_t> n(d);
  std::vector<double> h(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double w = quad.box.hi[k] - quad.box.lo[k];
    n[k] = static_cast<std::size_t>(std::ceil(w / quad.spacing - 1e-9)) + 1;
    if (n[k] < 3) throw ConfigError("quadrature grid needs at least 3 nodes per axis");
    h[k] = w / static_cast<double>(n[k] - 1);
  }
  const std::size_t total = d == 1 ? n[0] : n[0] * n[1];
  std::vector<double> U(total), wts(total);
  Point x(d);
  double umin = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < total; ++idx) {
    const std::size_t i = d == 1 ? idx : idx / n[1];
    x[0] = quad.box.lo[0] + h[0] * static_cast<double>(i);
    double w = h[0] * ((i == 0 || i + 1 == n[0]) ? 0.5 : 1.0);
    if (d == 2) {
      const std::size_t j = idx % n[1];
      x[1] = quad.box.lo[1] + h[1] * static_cast<double>(j);
      w *= h[1] * ((j == 0 || j + 1 == n[1]) ? 0.5 : 1.0);
    }
    U[idx] = model.energy(x);
    wts[idx] = w;
    umin = std::min(umin, U[idx]);
  }
  umin = std::min(umin, model.global_min_value());

  const double level = umin + delta;
  double z = 0.0, tail = 0.0;
  std::vector<double> w(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    w[idx] = std::exp(-(U[idx] - umin) / eps);
    z += wts[idx] * w[idx];
  }
  if (d == 1) {
    // Piecewise-linear integrand; intervals cut by the level set are split at the
    // linearly interpolated crossing, which keeps the tail second-order accurate.
    for (std::size_t k = 0; k + 1 < total; ++k) {
      const bool a = U[k] > level, b = U[k + 1] > level;
      if (a && b) {
        tail += 0.5 * h[0] * (w[k] + w[k + 1]);
      } else if (a != b) {
        const double f = (level - U[k]) / (U[k + 1] - U[k]);
        const double wc = w[k] + f * (w[k + 1] - w[k]);
        tail += a ? 0.5 * f * h[0] * (w[k] + wc) : 0.5 * (1.0 - f) * h[0] * (wc + w[k + 1]);
      }
    }
  } else {
    for (std::size_t idx = 0; idx < total; ++idx) {
      if (U[idx] > level) tail += wts[idx] * w[idx];
    }
  }

  // Mass beyond each face ~ exp(-(U_face - umin)/eps) * eps / |dU/dn|, integrated along the face.
  double beyond = 0.0;
  std::vector<double> g(d);
  auto face_term = [&](const Point& p, std::size_t axis, double sign, double weight) {
    model.gradient(p, g);
    const double slope = sign * g[axis];
    const double e = std::exp(-(model.energy(p) - umin) / eps);
    if (e == 0.0) return;
    if (!(slope > 0.0)) {
      beyond = std::numeric_limits<double>::infinity();
      return;
    }
    beyond += weight * e * eps / slope;
  };
  for (std::size_t axis = 0; axis < d; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const double sign = side == 0 ? -1.0 : 1.0;
      Point p(d);
      p[axis] = side == 0 ? quad.box.lo[axis] : quad.box.hi[axis];
      if (d == 1) {
        face_term(p, axis, sign, 1.0);
      } else {
        const std::size_t other = 1 - axis;
        for (std::size_t j = 0; j < n[other]; ++j) {
          p[other] = quad.box.lo[other] + h[other] * static_cast<double>(j);
          face_term(p, axis, sign, h[other] * ((j == 0 || j + 1 == n[other]) ? 0.5 : 1.0));
        }
      }
    }
  }

  GibbsTail out;
  out.truncation_estimate = beyond / z;
  if (!(out.truncation_estimate <= 1e-6)) {
    throw NumericalError(fmt::format("quadrature box truncates an estimated {:.3g} of Z at eps = {:.6g}",
                                     out.truncation_estimate, eps));
  }
  out.log_Z = std::log(z) - umin / eps;
  out.Z = std::exp(out.log_Z);
  out.tail_mass = tail / z;
  out.scaled_tail = std::exp(delta / eps) * out.tail_mass;
  return out;
}

std::string to_string(GammaFunctional w) {
  switch (w) {
    case GammaFunctional::Phi0:
      return "Phi0";
    case GammaFunctional::Phi1:
      return "Phi1";
    case GammaFunctional::Phi2:
      return "Phi2";
    case GammaFunctional::Psi:
      return "Psi";
  }
  return "Psi";
}

GammaFunctional parse_gamma_functional(const std::string& s) {
  if (s == "Phi0") return GammaFunctional::Phi0;
  if (s == "Phi1") return GammaFunctional::Phi1;
  if (s == "Phi2") return GammaFunctional::Phi2;
  if (s == "Psi") return GammaFunctional::Psi;
  throw ConfigError(fmt::format("unknown Gamma functional '{}' (expected Phi0, Phi1, Phi2 or Psi)", s));
}

double gamma_beta(const DiscreteGenerator& gen) noexcept {
  return gamma_of_eps(gen.s(), gen.hessian_sup_norm(), gen.sigma());
}

namespace {

constexpr std::size_t kLayer = 3;
constexpr std::size_t kRichardsonLayer = 6;

// Centred finite differences with stride k for the adjoint generator
// L* f = -y f_x + (s U' - y/sigma) f_y + f_yy.
class Calculus {
 public:
  Calculus(std::span<const double> h, const DiscreteGenerator& gen, std::size_t k)
      : h_(h), gen_(gen), g_(gen.grid()), k_(k), dx_(g_.dx() * static_cast<double>(k)),
        dy_(g_.dy() * static_cast<double>(k)) {}

  using Fn = std::function<double(std::size_t, std::size_t)>;

  [[nodiscard]] double h(std::size_t i, std::size_t j) const { return h_[g_.index(i, j)]; }
  [[nodiscard]] double dx(const Fn& f, std::size_t i, std::size_t j) const {
    return (f(i + k_, j) - f(i - k_, j)) / (2.0 * dx_);
  }
  [[nodiscard]] double dy(const Fn& f, std::size_t i, std::size_t j) const {
    return (f(i, j + k_) - f(i, j - k_)) / (2.0 * dy_);
  }
  [[nodiscard]] double dyy(const Fn& f, std::size_t i, std::size_t j) const {
    return (f(i, j + k_) - 2.0 * f(i, j) + f(i, j - k_)) / (dy_ * dy_);
  }
  [[nodiscard]] double Lstar(const Fn& f, std::size_t i, std::size_t j) const {
    const double y = g_.y(static_cast<std::ptrdiff_t>(j));
    return -y * dx(f, i, j) + (gen_.s() * gen_.gradient_at(i) - y / gen_.sigma()) * dy(f, i, j) + dyy(f, i, j);
  }
  [[nodiscard]] Fn hfn() const {
    return [this](std::size_t i, std::size_t j) { return h(i, j); };
  }

 private:
  std::span<const double> h_;
  const DiscreteGenerator& gen_;
  const PhaseGrid& g_;
  std::size_t k_;
  double dx_, dy_;
};

struct PointEval {
  double value = 0.0;  // slack or residual
  double scale = 0.0;  // magnitude of the cancelling terms, for the round-off floor
};

// Phi(h) = F(h, h_x, h_y) with partials, so that DPhi.g = F_h g + F_hx g_x + F_hy g_y.
struct Functional {
  std::function<double(double, double, double)> F;
  std::function<void(double, double, double, double&, double&, double&)> dF;
};

Functional make_functional(GammaFunctional w, double beta) {
  auto phi0 = [](double h, double, double) { return h * std::log(h); };
  auto phi1 = [](double h, double a, double b) { return (a + b) * (a + b) / h; };
  auto phi2 = [](double h, double a, double b) { return (a * a + b * b) / h; };
  switch (w) {
    case GammaFunctional::Phi0:
      return {phi0, [](double h, double, double, double& fh, double& fa, double& fb) {
                fh = std::log(h) + 1.0;
                fa = fb = 0.0;
              }};
    case GammaFunctional::Phi1:
      return {phi1, [](double h, double a, double b, double& fh, double& fa, double& fb) {
                fh = -(a + b) * (a + b) / (h * h);
                fa = fb = 2.0 * (a + b) / h;
              }};
    case GammaFunctional::Phi2:
      return {phi2, [](double h, double a, double b, double& fh, double& fa, double& fb) {
                fh = -(a * a + b * b) / (h * h);
                fa = 2.0 * a / h;
                fb = 2.0 * b / h;
              }};
    case GammaFunctional::Psi:
      return {[=](double h, double a, double b) { return phi1(h, a, b) + beta * phi0(h, a, b); },
              [beta](double h, double a, double b, double& fh, double& fa, double& fb) {
                fh = -(a + b) * (a + b) / (h * h) + beta * (std::log(h) + 1.0);
                fa = fb = 2.0 * (a + b) / h;
              }};
  }
  return {phi0, nullptr};
}

// Gamma_{L*,Phi}(h) at (i, j); the caller guarantees 2k cells of margin.
PointEval gamma_at(const Calculus& c, const Functional& fn, std::size_t i, std::size_t j) {
  const auto H = c.hfn();
  auto phi = [&](std::size_t a, std::size_t b) { return fn.F(c.h(a, b), c.dx(H, a, b), c.dy(H, a, b)); };
  auto Lh = [&](std::size_t a, std::size_t b) { return c.Lstar(H, a, b); };
  const double h = c.h(i, j), hx = c.dx(H, i, j), hy = c.dy(H, i, j);
  double fh = 0.0, fa = 0.0, fb = 0.0;
  fn.dF(h, hx, hy, fh, fa, fb);
  const double lphi = c.Lstar(phi, i, j);
  const double dphi = fh * Lh(i, j) + fa * c.dx(Lh, i, j) + fb * c.dy(Lh, i, j);
  return {0.5 * (lphi - dphi), 0.5 * (std::abs(lphi) + std::abs(dphi))};
}

using PointFn = std::function<PointEval(const Calculus&, std::size_t, std::size_t)>;

struct Sweep {
  double min_value = std::numeric_limits<double>::infinity();
  double max_abs = 0.0;
  std::size_t arg_i = 0, arg_j = 0;
  std::size_t points = 0;
  double scale = 0.0;
  double C_h = 0.0;
  double tol = 0.0;
};

// Evaluates `fn` on the interior at stride 1, then at stride 2 on the deeper
// interior to estimate the O(dx^2 + dy^2) constant.
Sweep sweep(std::span<const double> h, const DiscreteGenerator& gen, const PointFn& fn, double safety) {
  const PhaseGrid& g = gen.grid();
  if (g.nx < 2 * kRichardsonLayer + 1 || g.ny < 2 * kRichardsonLayer + 1) {
    throw ConfigError("Gamma checks need at least 13 cells per axis");
  }
  const Calculus c1(h, gen, 1), c2(h, gen, 2);
  Sweep s;
  double max_diff = 0.0;
  for (std::size_t i = kLayer; i + kLayer < g.nx; ++i) {
    for (std::size_t j = kLayer; j + kLayer < g.ny; ++j) {
      const PointEval e = fn(c1, i, j);
      if (!std::isfinite(e.value)) {
        throw NumericalError(fmt::format("non-finite Gamma value at cell ({}, {})", i, j));
      }
      ++s.points;
      s.scale = std::max(s.scale, e.scale);
      s.max_abs = std::max(s.max_abs, std::abs(e.value));
      if (e.value < s.min_value) {
        s.min_value = e.value;
        s.arg_i = i;
        s.arg_j = j;
      }
      if (i >= kRichardsonLayer && j >= kRichardsonLayer && i + kRichardsonLayer < g.nx &&
          j + kRichardsonLayer < g.ny) {
        const PointEval e2 = fn(c2, i, j);
        if (std::isfinite(e2.value)) max_diff = std::max(max_diff, std::abs(e2.value - e.value));
      }
    }
  }
  const double h2 = g.dx() * g.dx() + g.dy() * g.dy();
  s.C_h = max_diff / (3.0 * h2);
  const double floor = 1e-9 * std::max(s.scale, 1e-300);
  s.tol = safety * s.C_h * h2 + floor;
  return s;
}

void check_positive(std::span<const double> h, const DiscreteGenerator& gen) {
  if (h.size() != gen.grid().size()) throw ConfigError("grid function size does not match the generator grid");
  for (double v : h) {
    if (!(v > 0.0)) throw ConfigError("Gamma checks need a strictly positive grid function");
    if (!std::isfinite(v)) throw NumericalError("grid function is not finite");
  }
}

}  // namespace

GammaReport gamma_check(std::span<const double> h, const DiscreteGenerator& gen, GammaFunctional which,
                        double safety) {
  check_positive(h, gen);
  const double beta = gamma_beta(gen);
  const Functional fn = make_functional(which, beta);
  const Functional phi2 = make_functional(GammaFunctional::Phi2, beta);
  const double K = gen.s() * gen.hessian_sup_norm() + 1.0 + 1.0 / gen.sigma();
  const double inv_sigma = 1.0 / gen.sigma();
  const double s = gen.s();

  const PointFn slack = [&](const Calculus& c, std::size_t i, std::size_t j) {
    PointEval e = gamma_at(c, fn, i, j);
    const auto H = c.hfn();
    const double h0 = c.h(i, j), hx = c.dx(H, i, j), hy = c.dy(H, i, j);
    switch (which) {
      case GammaFunctional::Phi0:
        // Chain rule with the 1/2 in the definition: Gamma_{Phi0}(h) = Gamma(h) / (2h), Gamma(h) = h_y^2.
        e.value -= 0.5 * hy * hy / h0;
        break;
      case GammaFunctional::Phi1:
        e.value -= (hx + hy) * (hx + (inv_sigma - s * gen.hessian_at(i)) * hy) / h0;
        break;
      case GammaFunctional::Phi2:
        e.value += K * phi2.F(h0, hx, hy);
        break;
      case GammaFunctional::Psi:
        e.value -= 0.5 * phi2.F(h0, hx, hy);
        break;
    }
    return e;
  };
  const Sweep sw = sweep(h, gen, slack, safety);

  GammaReport rep;
  rep.which = which;
  rep.beta = beta;
  rep.min_slack = sw.min_value;
  rep.argmin_i = sw.arg_i;
  rep.argmin_j = sw.arg_j;
  rep.C_h = sw.C_h;
  rep.tol = sw.tol;
  rep.points = sw.points;
  if (which == GammaFunctional::Phi0) {
    rep.max_abs_residual = sw.max_abs;
    rep.interior_pass = sw.max_abs <= sw.tol;
  } else {
    rep.interior_pass = sw.min_value >= -sw.tol;
  }
  return rep;
}

ResidualReport quadratic_lemma_check(std::span<const double> h, const DiscreteGenerator& gen, double safety) {
  check_positive(h, gen);
  const double inv_sigma = 1.0 / gen.sigma();
  const Functional quad{[](double, double, double b) { return b * b; },
                        [](double, double, double b, double& fh, double& fa, double& fb) {
                          fh = 0.0;
                          fa = 0.0;
                          fb = 2.0 * b;
                        }};
  const PointFn residual = [&](const Calculus& c, std::size_t i, std::size_t j) {
    PointEval e = gamma_at(c, quad, i, j);
    const auto H = c.hfn();
    auto hy = [&](std::size_t a, std::size_t b) { return c.dy(H, a, b); };
    const double hyy = c.dy(hy, i, j);
    e.value -= hyy * hyy + hy(i, j) * (c.dx(H, i, j) + inv_sigma * hy(i, j));
    return e;
  };
  const Sweep sw = sweep(h, gen, residual, safety);
  return ResidualReport{sw.max_abs, sw.tol, sw.max_abs <= sw.tol, sw.points};
}

ResidualReport carre_du_champ_check(std::span<const double> f, const DiscreteGenerator& gen, double safety) {
  if (f.size() != gen.grid().size()) throw ConfigError("grid function size does not match the generator grid");
  const PointFn residual = [&](const Calculus& c, std::size_t i, std::size_t j) {
    const auto F = c.hfn();
    auto f2 = [&](std::size_t a, std::size_t b) { return c.h(a, b) * c.h(a, b); };
    const double l_f2 = c.Lstar(f2, i, j);
    const double two_f_lf = 2.0 * c.h(i, j) * c.Lstar(F, i, j);
    const double fy = c.dy(F, i, j);
    return PointEval{0.5 * (l_f2 - two_f_lf) - fy * fy, 0.5 * (std::abs(l_f2) + std::abs(two_f_lf))};
  };
  const Sweep sw = sweep(f, gen, residual, safety);
  return ResidualReport{sw.max_abs, sw.tol, sw.max_abs <= sw.tol, sw.points};
}

}  // namespace lanneal
