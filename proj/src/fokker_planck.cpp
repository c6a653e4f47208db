#include "lanneal/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "lanneal/error.hpp"

namespace lanneal {

namespace {

void require_1d(const PotentialModel& model) {
  if (model.dim() != 1) throw ConfigError("the phase-space solver supports one-dimensional positions only");
}

double energy_1d(const PotentialModel& model, double x) {
  return model.energy(std::span<const double>(&x, 1));
}

double gradient_1d(const PotentialModel& model, double x) {
  double g = 0.0;
  model.gradient(std::span<const double>(&x, 1), std::span<double>(&g, 1));
  return g;
}

double hessian_1d(const PotentialModel& model, double x) {
  double h = 0.0;
  model.hessian(std::span<const double>(&x, 1), std::span<double>(&h, 1));
  return h;
}

void check_size(const PhaseGrid& g, std::size_t n, const char* what) {
  if (n != g.size()) throw ConfigError(fmt::format("{}: grid function has {} values, grid has {}", what, n, g.size()));
}

}  // namespace

PhaseGrid PhaseGrid::make(double x_min, double x_max, double y_min, double y_max, std::size_t nx, std::size_t ny) {
  if (!(x_max > x_min) || !(y_max > y_min)) throw ConfigError("phase grid box must have positive extent");
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) || !std::isfinite(y_max)) {
    throw ConfigError("phase grid box must be finite");
  }
  if (nx < 8 || ny < 8) throw ConfigError("phase grid needs at least 8 cells per axis");
  return PhaseGrid{x_min, x_max, y_min, y_max, nx, ny};
}

PhaseGrid default_phase_grid(const VarianceMap& var, double eps0) {
  if (!(eps0 > 0.0)) throw ConfigError("eps0 must be positive");
  const double w = 6.5 * std::sqrt(var.sigma(eps0));
  return PhaseGrid::make(-3.0, 3.0, -w, w, 128, 128);
}

double DensityField::mass() const noexcept {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * grid.cell_area();
}

double DensityField::boundary_mass() const noexcept {
  const std::size_t nx = grid.nx, ny = grid.ny;
  double sum = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      if (i < 2 || j < 2 || i + 2 >= nx || j + 2 >= ny) sum += values[grid.index(i, j)];
    }
  }
  return sum * grid.cell_area();
}

// Upwind construction. With A_i = exp(-U_i/eps) and g_j = exp(-y_j^2/(2 sigma)),
// face weights are min(A_a, A_b) (resp. min(g_a, g_b)); boundary faces carry
// weight zero. Only ratios face/cell are stored, which avoids underflow:
//   axp[k] = Af_k / A_{k-1}, axm[k] = Af_k / A_k   (x face k between cells k-1, k)
//   bqp[k] = gf_k / g_{k-1}, bqm[k] = gf_k / g_k
// The discrete force and velocity are the weight derivatives
//   F_i  = -eps   (Af_{i+1} - Af_i) / (dx A_i)  ~ U'(x_i)
//   y'_j = -sigma (gf_{j+1} - gf_j) / (dy g_j)  ~ y_j
// and the y-transport speed is v_i = -s F_i. The update then satisfies
// forward(A g) = 0 exactly.
void UpwindCoeffs::build(const std::vector<double>& U, const PhaseGrid& grid, double eps, double sigma) {
  const std::size_t nx = grid.nx, ny = grid.ny;
  const double dx = grid.dx(), dy = grid.dy();
  const double s = sigma / eps;
  axp.assign(nx + 1, 0.0);
  axm.assign(nx + 1, 0.0);
  for (std::size_t k = 1; k < nx; ++k) {
    const double du = U[k] - U[k - 1];
    axp[k] = du > 0.0 ? std::exp(-du / eps) : 1.0;
    axm[k] = du < 0.0 ? std::exp(du / eps) : 1.0;
  }
  bqp.assign(ny + 1, 0.0);
  bqm.assign(ny + 1, 0.0);
  for (std::size_t k = 1; k < ny; ++k) {
    const double ya = grid.y(static_cast<std::ptrdiff_t>(k) - 1), yb = grid.y(static_cast<std::ptrdiff_t>(k));
    const double dq = (yb * yb - ya * ya) / (2.0 * sigma);
    bqp[k] = dq > 0.0 ? std::exp(-dq) : 1.0;
    bqm[k] = dq < 0.0 ? std::exp(dq) : 1.0;
  }
  vdisc.resize(nx);
  double vmax = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    vdisc[i] = s * eps * (axp[i + 1] - axm[i]) / dx;
    vmax = std::max(vmax, std::abs(vdisc[i]));
  }
  ydisc.resize(ny);
  double ymax = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    ydisc[j] = -sigma * (bqp[j + 1] - bqm[j]) / dy;
    ymax = std::max(ymax, std::abs(ydisc[j]));
  }
  max_dt = 0.9 / (ymax / dx + vmax / dy + 2.0 / (dy * dy));
}

DiscreteGenerator::DiscreteGenerator(const PotentialModel& model, const VarianceMap& var, double eps,
                                     const PhaseGrid& grid, Stencil stencil)
    : grid_(grid), stencil_(stencil), eps_(eps), sigma_(var.sigma(eps)), s_(0.0),
      hess_sup_(model.hessian_sup_norm()) {
  require_1d(model);
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("generator needs eps > 0");
  if (!(sigma_ > 0.0)) throw ConfigError("generator needs sigma(eps) > 0");
  s_ = sigma_ / eps_;
  grad_.resize(grid_.nx);
  hess_.resize(grid_.nx);
  for (std::size_t i = 0; i < grid_.nx; ++i) {
    const double x = grid_.x(static_cast<std::ptrdiff_t>(i));
    grad_[i] = gradient_1d(model, x);
    hess_[i] = hessian_1d(model, x);
  }
  std::vector<double> U(grid_.nx);
  for (std::size_t i = 0; i < grid_.nx; ++i) U[i] = energy_1d(model, grid_.x(static_cast<std::ptrdiff_t>(i)));
  up_.build(U, grid_, eps_, sigma_);

  // mu = A g / Z, built relative to the grid minimum of U.
  const double umin = *std::min_element(U.begin(), U.end());
  mu_.assign(grid_.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < grid_.nx; ++i) {
    const double a = std::exp(-(U[i] - umin) / eps_);
    for (std::size_t j = 0; j < grid_.ny; ++j) {
      const double y = grid_.y(static_cast<std::ptrdiff_t>(j));
      const double v = a * std::exp(-y * y / (2.0 * sigma_));
      mu_[grid_.index(i, j)] = v;
      total += v;
    }
  }
  const double z = total * grid_.cell_area();
  for (double& v : mu_) v /= z;
}

void DiscreteGenerator::apply_forward(std::span<const double> m, std::span<double> out) const {
  check_size(grid_, m.size(), "apply_forward");
  check_size(grid_, out.size(), "apply_forward");
  if (stencil_ == Stencil::centered) {
    std::vector<double> h(m.size()), lh(m.size());
    for (std::size_t c = 0; c < m.size(); ++c) h[c] = mu_[c] > 0.0 ? m[c] / mu_[c] : 0.0;
    apply_Lstar(h, lh);
    for (std::size_t c = 0; c < m.size(); ++c) out[c] = mu_[c] * lh[c];
    return;
  }
  const std::size_t nx = grid_.nx, ny = grid_.ny;
  const double dx = grid_.dx(), dy = grid_.dy();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 1; k < nx; ++k) {
    for (std::size_t j = 0; j < ny; ++j) {
      const double yv = up_.ydisc[j];
      const double J = yv > 0.0 ? yv * up_.axp[k] * m[grid_.index(k - 1, j)] : yv * up_.axm[k] * m[grid_.index(k, j)];
      out[grid_.index(k - 1, j)] -= J / dx;
      out[grid_.index(k, j)] += J / dx;
    }
  }
  for (std::size_t i = 0; i < nx; ++i) {
    const double v = up_.vdisc[i];
    const double vp = std::max(v, 0.0), vm = std::min(v, 0.0);
    for (std::size_t k = 1; k < ny; ++k) {
      const std::size_t a = grid_.index(i, k - 1), b = grid_.index(i, k);
      const double J = up_.bqp[k] * (vp + 1.0 / dy) * m[a] - up_.bqm[k] * (1.0 / dy - vm) * m[b];
      out[a] -= J / dy;
      out[b] += J / dy;
    }
  }
}

// Transpose of the forward operator: every face moving mass a -> b at rate
// alpha contributes alpha (f_b - f_a) to (L f)_a, so L 1 = 0 holds exactly.
void DiscreteGenerator::apply_L(std::span<const double> f, std::span<double> out) const {
  check_size(grid_, f.size(), "apply_L");
  check_size(grid_, out.size(), "apply_L");
  const std::size_t nx = grid_.nx, ny = grid_.ny;
  const double dx = grid_.dx(), dy = grid_.dy();
  if (stencil_ == Stencil::centered) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 1; i + 1 < nx; ++i) {
      for (std::size_t j = 1; j + 1 < ny; ++j) {
        const double y = grid_.y(static_cast<std::ptrdiff_t>(j));
        const std::size_t c = grid_.index(i, j);
        const double fx = (f[c + ny] - f[c - ny]) / (2.0 * dx);
        const double fy = (f[c + 1] - f[c - 1]) / (2.0 * dy);
        const double fyy = (f[c + 1] - 2.0 * f[c] + f[c - 1]) / (dy * dy);
        out[c] = y * fx - (y / sigma_ + s_ * grad_[i]) * fy + fyy;
      }
    }
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 1; k < nx; ++k) {
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t a = grid_.index(k - 1, j), b = grid_.index(k, j);
      const double yv = up_.ydisc[j];
      const double diff = f[b] - f[a];
      if (yv > 0.0) out[a] += yv * up_.axp[k] * diff / dx;
      else out[b] += -yv * up_.axm[k] * (-diff) / dx;
    }
  }
  for (std::size_t i = 0; i < nx; ++i) {
    const double v = up_.vdisc[i];
    const double vp = std::max(v, 0.0), vm = std::min(v, 0.0);
    for (std::size_t k = 1; k < ny; ++k) {
      const std::size_t a = grid_.index(i, k - 1), b = grid_.index(i, k);
      const double diff = f[b] - f[a];
      out[a] += up_.bqp[k] * (vp + 1.0 / dy) * diff / dy;
      out[b] -= up_.bqm[k] * (1.0 / dy - vm) * diff / dy;
    }
  }
}

// Upwind: forward(mu h) / mu written with face/cell weight ratios.
void DiscreteGenerator::apply_Lstar(std::span<const double> h, std::span<double> out) const {
  check_size(grid_, h.size(), "apply_Lstar");
  check_size(grid_, out.size(), "apply_Lstar");
  const std::size_t nx = grid_.nx, ny = grid_.ny;
  const double dx = grid_.dx(), dy = grid_.dy();
  std::fill(out.begin(), out.end(), 0.0);
  if (stencil_ == Stencil::centered) {
    for (std::size_t i = 1; i + 1 < nx; ++i) {
      for (std::size_t j = 1; j + 1 < ny; ++j) {
        const double y = grid_.y(static_cast<std::ptrdiff_t>(j));
        const std::size_t c = grid_.index(i, j);
        const double hx = (h[c + ny] - h[c - ny]) / (2.0 * dx);
        const double hy = (h[c + 1] - h[c - 1]) / (2.0 * dy);
        const double hyy = (h[c + 1] - 2.0 * h[c] + h[c - 1]) / (dy * dy);
        out[c] = -y * hx + (s_ * grad_[i] - y / sigma_) * hy + hyy;
      }
    }
    return;
  }
  for (std::size_t k = 1; k < nx; ++k) {
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t a = grid_.index(k - 1, j), b = grid_.index(k, j);
      const double yv = up_.ydisc[j];
      // Flux divided by the face weight Af_k g_j.
      const double Jn = yv > 0.0 ? yv * h[a] : yv * h[b];
      out[a] -= up_.axp[k] * Jn / dx;
      out[b] += up_.axm[k] * Jn / dx;
    }
  }
  for (std::size_t i = 0; i < nx; ++i) {
    const double v = up_.vdisc[i];
    const double vp = std::max(v, 0.0), vm = std::min(v, 0.0);
    for (std::size_t k = 1; k < ny; ++k) {
      const std::size_t a = grid_.index(i, k - 1), b = grid_.index(i, k);
      const double Jn = vp * h[a] + vm * h[b] + (h[a] - h[b]) / dy;
      out[a] -= up_.bqp[k] * Jn / dy;
      out[b] += up_.bqm[k] * Jn / dy;
    }
  }
}

double gibbs_truncated_mass(const PotentialModel& model, const VarianceMap& var, double eps,
                            const PhaseGrid& grid) {
  require_1d(model);
  const double sigma = var.sigma(eps);
  const double umin = model.global_min_value();
  auto weight = [&](double x) { return std::exp(-(energy_1d(model, x) - umin) / eps); };
  auto trapezoid = [&](double a, double b, std::size_t n) {
    const double h = (b - a) / static_cast<double>(n);
    double sum = 0.5 * (weight(a) + weight(b));
    for (std::size_t k = 1; k < n; ++k) sum += weight(a + h * static_cast<double>(k));
    return sum * h;
  };
  const double width = grid.x_max - grid.x_min;
  const double inside = trapezoid(grid.x_min, grid.x_max, 8000);
  const double outside = trapezoid(grid.x_min - width, grid.x_min, 8000) + trapezoid(grid.x_max, grid.x_max + width, 8000);
  const double tx = outside / (inside + outside);
  const double root = std::sqrt(2.0 * sigma);
  const double ty = 0.5 * std::erfc(grid.y_max / root) + 0.5 * std::erfc(-grid.y_min / root);
  return 1.0 - (1.0 - tx) * (1.0 - ty);
}

DensityField gibbs_density(const PotentialModel& model, const VarianceMap& var, double eps, const PhaseGrid& grid) {
  const double lost = gibbs_truncated_mass(model, var, eps, grid);
  if (lost > 1e-9) {
    throw NumericalError(fmt::format("grid box truncates {:.3g} of the Gibbs mass at eps = {:.6g} (limit 1e-9)", lost, eps));
  }
  const DiscreteGenerator gen(model, var, eps, grid);
  return DensityField{grid, gen.mu(), 0.0};
}

DensityField local_gibbs_density(const PotentialModel& model, const VarianceMap& var, double eps, double center,
                                 const PhaseGrid& grid) {
  require_1d(model);
  if (!(eps > 0.0)) throw ConfigError("local Gibbs density needs eps > 0");
  const double k = hessian_1d(model, center);
  if (!(k > 0.0)) throw AssumptionViolation(fmt::format("U'' is not positive at x = {:.6g}", center));
  const double sigma = var.sigma(eps);
  DensityField m{grid, std::vector<double>(grid.size()), 0.0};
  double total = 0.0;
  for (std::size_t i = 0; i < grid.nx; ++i) {
    const double dxc = grid.x(static_cast<std::ptrdiff_t>(i)) - center;
    for (std::size_t j = 0; j < grid.ny; ++j) {
      const double y = grid.y(static_cast<std::ptrdiff_t>(j));
      const double v = std::exp(-k * dxc * dxc / (2.0 * eps) - y * y / (2.0 * sigma));
      m.values[grid.index(i, j)] = v;
      total += v;
    }
  }
  if (!(total > 0.0)) throw NumericalError("local Gibbs density vanishes on the grid");
  const double z = total * grid.cell_area();
  for (double& v : m.values) v /= z;
  return m;
}

FokkerPlanckSolver::FokkerPlanckSolver(const PotentialModel& model, const CoolingSchedule& sched,
                                       const VarianceMap& var, double dt_pde)
    : model_(model), sched_(sched), var_(var), dt_pde_(dt_pde) {
  require_1d(model);
  if (!std::isfinite(dt_pde)) throw ConfigError("dt_pde must be finite");
}

namespace {

constexpr double kFlushBelow = 1e-200;
constexpr double kHuge = 1e300;

struct StepWorkspace {
  std::vector<double> yp, ym, jlo, jhi, jy;
};

// One explicit step; rows are processed with branch-free upwinding so the
// inner loops vectorise. Fluxes through boundary faces are zero. Returns
// nonzero when some output is negative or not finite. Element-wise arithmetic
// only, so every clone produces identical bits.
__attribute__((target_clones("avx2", "default"))) int upwind_step(const PhaseGrid& grid, const UpwindCoeffs& c,
                                                                  StepWorkspace& w, const double* __restrict m,
                                                                  double* __restrict out, double dt) {
  const std::size_t nx = grid.nx, ny = grid.ny;
  const double rdy = 1.0 / grid.dy();
  w.yp.resize(ny);
  w.ym.resize(ny);
  w.jlo.assign(ny, 0.0);
  w.jhi.resize(ny);
  w.jy.assign(ny + 1, 0.0);
  double* yp = w.yp.data();
  double* ym = w.ym.data();
  double* jy = w.jy.data();
  for (std::size_t j = 0; j < ny; ++j) {
    yp[j] = std::max(c.ydisc[j], 0.0);
    ym[j] = std::min(c.ydisc[j], 0.0);
  }
  const double cx = dt / grid.dx(), cy = dt * rdy;
  int bad = 0;
  const double* bqp = c.bqp.data();
  const double* bqm = c.bqm.data();
  for (std::size_t i = 0; i < nx; ++i) {
    const double* row = m + i * ny;
    double* jhi = w.jhi.data();
    const double* jlo = w.jlo.data();
    if (i + 1 < nx) {
      const double* next = row + ny;
      const double a = c.axp[i + 1], b = c.axm[i + 1];
      for (std::size_t j = 0; j < ny; ++j) jhi[j] = yp[j] * a * row[j] + ym[j] * b * next[j];
    } else {
      std::fill(w.jhi.begin(), w.jhi.end(), 0.0);
    }
    const double v = c.vdisc[i];
    const double pv = std::max(v, 0.0) + rdy, qv = rdy - std::min(v, 0.0);
    for (std::size_t k = 1; k < ny; ++k) jy[k] = bqp[k] * pv * row[k - 1] - bqm[k] * qv * row[k];
    double* o = out + i * ny;
    for (std::size_t j = 0; j < ny; ++j) {
      const double v = row[j] - cx * (jhi[j] - jlo[j]) - cy * (jy[j + 1] - jy[j]);
      bad |= static_cast<int>(!(v >= 0.0 && v <= kHuge));
      // Values this small only feed subnormal arithmetic; dropping them moves no measurable mass.
      o[j] = (v >= 0.0 && v < kFlushBelow) ? 0.0 : v;
    }
    w.jlo.swap(w.jhi);
  }
  return bad;
}

}  // namespace

EvolveStats FokkerPlanckSolver::advance(DensityField& m, double t_end) const {
  const PhaseGrid& grid = m.grid;
  check_size(grid, m.values.size(), "evolve");
  if (!(t_end >= m.time)) throw ConfigError("evolve: t_end precedes the current time");
  std::vector<double> U(grid.nx);
  for (std::size_t i = 0; i < grid.nx; ++i) U[i] = energy_1d(model_, grid.x(static_cast<std::ptrdiff_t>(i)));

  EvolveStats stats;
  std::vector<double> next(m.values.size());
  UpwindCoeffs coeffs;
  StepWorkspace work;
  const double area = grid.cell_area();
  while (m.time < t_end) {
    const double eps = sched_.epsilon_at(m.time);
    coeffs.build(U, grid, eps, var_.sigma(eps));
    const double limit = coeffs.max_dt;
    double dt = dt_pde_ > 0.0 ? dt_pde_ : limit;
    if (dt > limit * (1.0 + 1e-12)) {
      throw NumericalError(
          fmt::format("CFL violation: dt_pde = {:.6g} exceeds the stable step {:.6g} at t = {:.6g}", dt, limit, m.time));
    }
    const double remaining = t_end - m.time;
    const bool last = dt >= remaining;
    if (last) dt = remaining;
    const int bad = upwind_step(grid, coeffs, work, m.values.data(), next.data(), dt);
    double clipped = 0.0;
    if (bad) {
      for (double& v : next) {
        if (!std::isfinite(v)) throw NumericalError(fmt::format("non-finite density at t = {:.6g}", m.time));
        if (v < 0.0) {
          clipped -= v;
          v = 0.0;
        }
      }
      if (clipped * area > 1e-12) {
        throw NumericalError(fmt::format("clipped mass {:.3g} in one step at t = {:.6g}; grid under-resolved",
                                         clipped * area, m.time));
      }
      const double before = std::accumulate(m.values.begin(), m.values.end(), 0.0);
      const double after = std::accumulate(next.begin(), next.end(), 0.0);
      const double scale = before / after;
      for (double& v : next) v *= scale;
    }
    stats.max_clipped = std::max(stats.max_clipped, clipped * area);
    m.values.swap(next);
    m.time = last ? t_end : m.time + dt;
    stats.last_dt = dt;
    ++stats.steps;
  }
  return stats;
}

DensityField evolve(DensityField m, const PotentialModel& model, const CoolingSchedule& sched, const VarianceMap& var,
                    double t_end, double dt_pde) {
  const FokkerPlanckSolver solver(model, sched, var, dt_pde);
  solver.advance(m, t_end);
  return m;
}

double gamma_of_eps(double s, double hessian_sup, double sigma) noexcept {
  const double k = s * hessian_sup + 1.0 + 1.0 / sigma;
  return 0.5 + k * k;
}

EntropySuite entropy_suite(const DensityField& m, const PotentialModel& model, const VarianceMap& var, double eps) {
  const DiscreteGenerator gen(model, var, eps, m.grid);
  return entropy_suite(m, gen);
}

EntropySuite entropy_suite(const DensityField& m, const DiscreteGenerator& gen) {
  const PhaseGrid& grid = gen.grid();
  check_size(grid, m.values.size(), "entropy_suite");
  const std::vector<double>& mu = gen.mu();
  const std::size_t nx = grid.nx, ny = grid.ny, n = grid.size();
  const double mu_max = *std::max_element(mu.begin(), mu.end());
  const double cutoff = 1e-14 * mu_max;

  EntropySuite out;
  out.gamma_eps = gamma_of_eps(gen.s(), gen.hessian_sup_norm(), gen.sigma());
  out.mass = m.mass();

  std::vector<char> keep(n);
  double pm = 0.0, qm = 0.0, excluded = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    if (m.values[c] < 0.0 || !std::isfinite(m.values[c])) throw NumericalError("density has negative or non-finite values");
    keep[c] = mu[c] >= cutoff && mu[c] > 0.0;
    if (keep[c]) {
      if (m.values[c] <= 0.0 && mu[c] >= 1e-3 * mu_max) {
        throw NumericalError("density vanishes where the Gibbs density is large");
      }
      pm += m.values[c];
      qm += mu[c];
    } else {
      excluded += m.values[c];
    }
  }
  out.excluded_mass = excluded * grid.cell_area();
  if (!(pm > 0.0)) throw NumericalError("density has no mass on the retained cells");

  // h = p/q with p, q the renormalised cell masses.
  std::vector<double> q(n, 0.0), h(n, 1.0), lh(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    if (!keep[c]) continue;
    q[c] = mu[c] / qm;
    const double p = m.values[c] / pm;
    h[c] = std::max(p / q[c], 1e-300);
    lh[c] = std::log(h[c]);
    out.Ent += q[c] * (h[c] * lh[c] - h[c] + 1.0);
    out.L1 += std::abs(p - q[c]);
  }
  out.Ent = std::max(out.Ent, 0.0);

  const double dx = grid.dx(), dy = grid.dy();
  // Derivative of ln h along an axis; centred when both neighbours are retained.
  auto deriv = [&](std::size_t c, bool has_lo, bool has_hi, std::size_t stride, double d) {
    const bool lo = has_lo && keep[c - stride];
    const bool hi = has_hi && keep[c + stride];
    if (lo && hi) return (lh[c + stride] - lh[c - stride]) / (2.0 * d);
    if (hi) return (lh[c + stride] - lh[c]) / d;
    if (lo) return (lh[c] - lh[c - stride]) / d;
    return 0.0;
  };
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t c = grid.index(i, j);
      if (!keep[c]) continue;
      const double gx = deriv(c, i > 0, i + 1 < nx, ny, dx);
      const double gy = deriv(c, j > 0, j + 1 < ny, 1, dy);
      const double w = h[c] * q[c];
      out.I += (gx * gx + gy * gy) * w;
      out.Phi1 += (gx + gy) * (gx + gy) * w;
    }
  }
  out.H = out.Phi1 + out.gamma_eps * out.Ent;
  return out;
}

DecayReport decay_study(const DensityField& m0, const PotentialModel& model, const CoolingSchedule& sched,
                        const VarianceMap& var, double E_star, const std::vector<double>& checkpoint_times,
                        double dt_pde, const std::function<void(const DensityField&)>& on_checkpoint) {
  if (checkpoint_times.empty()) throw ConfigError("decay study needs checkpoint times");
  for (std::size_t k = 0; k < checkpoint_times.size(); ++k) {
    if (!(checkpoint_times[k] >= m0.time) || (k > 0 && !(checkpoint_times[k] > checkpoint_times[k - 1]))) {
      throw ConfigError("checkpoint times must be increasing and not before the initial time");
    }
  }
  DecayReport rep;
  rep.E = sched.E();
  rep.E_star = E_star;
  rep.predicted_exponent = -(1.0 - E_star / sched.E()) / 2.0;

  const FokkerPlanckSolver solver(model, sched, var, dt_pde);
  DensityField m = m0;
  for (double t : checkpoint_times) {
    rep.steps += solver.advance(m, t).steps;
    const double eps = sched.epsilon_at(m.time);
    DecayPoint pt;
    pt.t = m.time;
    pt.eps = eps;
    pt.suite = entropy_suite(m, model, var, eps);
    pt.boundary_mass = m.boundary_mass();
    rep.series.push_back(pt);
    if (on_checkpoint) on_checkpoint(m);
  }

  // Least-squares slope of ln H against ln t on the tail half.
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = rep.series.size() / 2; k < rep.series.size(); ++k) {
    const auto& p = rep.series[k];
    if (p.t > 0.0 && p.suite.H > 0.0) pts.emplace_back(std::log(p.t), std::log(p.suite.H));
  }
  if (pts.size() >= 2) {
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
    rep.fitted_exponent = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  return rep;
}

}  // namespace lanneal
