#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lanneal/potentials.hpp"
#include "lanneal/schedules.hpp"

namespace lanneal {

/// Cell-centred grid on [x_min, x_max] x [y_min, y_max]; storage index i * ny + j.
struct PhaseGrid {
  double x_min = -3.0, x_max = 3.0;
  double y_min = -4.0, y_max = 4.0;
  std::size_t nx = 128, ny = 128;

  static PhaseGrid make(double x_min, double x_max, double y_min, double y_max, std::size_t nx, std::size_t ny);

  [[nodiscard]] double dx() const noexcept { return (x_max - x_min) / static_cast<double>(nx); }
  [[nodiscard]] double dy() const noexcept { return (y_max - y_min) / static_cast<double>(ny); }
  [[nodiscard]] double x(std::ptrdiff_t i) const noexcept { return x_min + (static_cast<double>(i) + 0.5) * dx(); }
  [[nodiscard]] double y(std::ptrdiff_t j) const noexcept { return y_min + (static_cast<double>(j) + 0.5) * dy(); }
  [[nodiscard]] std::size_t size() const noexcept { return nx * ny; }
  [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * ny + j; }
  [[nodiscard]] double cell_area() const noexcept { return dx() * dy(); }
};

/// x in [-3, 3], y in [-w, w] with w = 6.5 sqrt(sigma(eps0)), 128 x 128 cells.
PhaseGrid default_phase_grid(const VarianceMap& var, double eps0);

/// Probability density (w.r.t. Lebesgue) sampled at cell centres.
struct DensityField {
  PhaseGrid grid;
  std::vector<double> values;
  double time = 0.0;

  /// Midpoint quadrature of the total mass.
  [[nodiscard]] double mass() const noexcept;
  /// Mass in the two outermost cell layers.
  [[nodiscard]] double boundary_mass() const noexcept;
};

/// Face/cell weight ratios of the well-balanced upwind scheme at one temperature.
struct UpwindCoeffs {
  std::vector<double> axp, axm;  // x faces 0..nx
  std::vector<double> bqp, bqm;  // y faces 0..ny
  std::vector<double> ydisc;     // discrete velocity per column j
  std::vector<double> vdisc;     // discrete y-drift per row i
  double max_dt = 0.0;

  /// U holds the energy at the x cell centres.
  void build(const std::vector<double>& U, const PhaseGrid& grid, double eps, double sigma);
};

enum class Stencil {
  /// Well-balanced upwind finite volume; exact stationarity of the discrete Gibbs density.
  upwind,
  /// Second-order centred differences with the exact coefficients; used by the Gamma checks.
  centered,
};

/// Kinetic generator at frozen eps on a phase grid.
///   L  f = y f_x - (y/sigma + s U') f_y + f_yy        (observables)
///   L* h = -y h_x + (s U' - y/sigma) h_y + h_yy       (densities relative to mu)
/// with s = sigma/eps. In the upwind stencil L is the exact mu-adjoint of L*,
/// and forward(m) = mu L*(m/mu) is the conservative flux-form update.
class DiscreteGenerator {
 public:
  DiscreteGenerator(const PotentialModel& model, const VarianceMap& var, double eps, const PhaseGrid& grid,
                    Stencil stencil = Stencil::upwind);

  void apply_forward(std::span<const double> m, std::span<double> out) const;
  void apply_L(std::span<const double> f, std::span<double> out) const;
  void apply_Lstar(std::span<const double> h, std::span<double> out) const;

  /// Discrete Gibbs density, normalised so that sum(mu) * dx * dy = 1.
  [[nodiscard]] const std::vector<double>& mu() const noexcept { return mu_; }
  [[nodiscard]] const PhaseGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] Stencil stencil() const noexcept { return stencil_; }
  [[nodiscard]] double eps() const noexcept { return eps_; }
  [[nodiscard]] double sigma() const noexcept { return sigma_; }
  /// Force scale sigma/eps.
  [[nodiscard]] double s() const noexcept { return s_; }
  /// U'' at the cell centre x_i.
  [[nodiscard]] double hessian_at(std::size_t i) const noexcept { return hess_[i]; }
  [[nodiscard]] double gradient_at(std::size_t i) const noexcept { return grad_[i]; }
  [[nodiscard]] double hessian_sup_norm() const noexcept { return hess_sup_; }
  /// Largest forward-Euler step keeping the upwind update positive (safety 0.9).
  [[nodiscard]] double max_stable_dt() const noexcept { return up_.max_dt; }
  [[nodiscard]] const UpwindCoeffs& upwind() const noexcept { return up_; }

 private:
  PhaseGrid grid_;
  Stencil stencil_;
  double eps_, sigma_, s_;
  double hess_sup_;
  std::vector<double> grad_, hess_;
  std::vector<double> mu_;
  UpwindCoeffs up_;
};

/// Normalised discrete Gibbs density on the grid. Throws NumericalError when the
/// continuous mass outside the grid box exceeds 1e-9.
DensityField gibbs_density(const PotentialModel& model, const VarianceMap& var, double eps, const PhaseGrid& grid);

/// Product Gaussian N(center, eps/U''(center)) x N(0, sigma(eps)), normalised on the grid.
DensityField local_gibbs_density(const PotentialModel& model, const VarianceMap& var, double eps, double center,
                                 const PhaseGrid& grid);

/// Continuous mass of mu_eps outside the grid box (x tail by quadrature, y tail exact).
double gibbs_truncated_mass(const PotentialModel& model, const VarianceMap& var, double eps, const PhaseGrid& grid);

struct EvolveStats {
  std::size_t steps = 0;
  double max_clipped = 0.0;
  double last_dt = 0.0;
};

/// Explicit upwind time stepping with eps refreshed every step.
class FokkerPlanckSolver {
 public:
  /// dt_pde <= 0 selects the stable step at each step's temperature.
  FokkerPlanckSolver(const PotentialModel& model, const CoolingSchedule& sched, const VarianceMap& var,
                     double dt_pde = 0.0);

  /// Advances `m` to t_end; throws NumericalError on a CFL violation or excessive clipping.
  EvolveStats advance(DensityField& m, double t_end) const;

 private:
  const PotentialModel& model_;
  const CoolingSchedule& sched_;
  const VarianceMap& var_;
  double dt_pde_;
};

/// One-shot evolve.
DensityField evolve(DensityField m, const PotentialModel& model, const CoolingSchedule& sched, const VarianceMap& var,
                    double t_end, double dt_pde = 0.0);

struct EntropySuite {
  double Ent = 0.0;
  double I = 0.0;
  double H = 0.0;
  double Phi1 = 0.0;
  double L1 = 0.0;
  double gamma_eps = 0.0;
  double excluded_mass = 0.0;
  double mass = 0.0;
};

/// gamma(eps) = 1/2 + (s ||U''|| + 1 + 1/sigma)^2.
double gamma_of_eps(double s, double hessian_sup, double sigma) noexcept;

/// Relative entropy, Fisher information, distorted entropy and L1 distance of
/// m against the discrete Gibbs density at eps. Both are renormalised to unit
/// mass on the cells where mu >= 1e-14 max(mu).
EntropySuite entropy_suite(const DensityField& m, const PotentialModel& model, const VarianceMap& var, double eps);
EntropySuite entropy_suite(const DensityField& m, const DiscreteGenerator& gen);

struct DecayPoint {
  double t = 0.0;
  double eps = 0.0;
  EntropySuite suite;
  double boundary_mass = 0.0;
};

struct DecayReport {
  std::vector<DecayPoint> series;
  double fitted_exponent = 0.0;    // slope of ln H vs ln t on the tail half
  double predicted_exponent = 0.0; // -(1 - E*/E)/2
  double E_star = 0.0;
  double E = 0.0;
  std::size_t steps = 0;
};

/// Evolves m0 and records the entropy suite at each checkpoint (t = 0 included if listed).
DecayReport decay_study(const DensityField& m0, const PotentialModel& model, const CoolingSchedule& sched,
                        const VarianceMap& var, double E_star, const std::vector<double>& checkpoint_times,
                        double dt_pde = 0.0,
                        const std::function<void(const DensityField&)>& on_checkpoint = nullptr);

}  // namespace lanneal
