#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lanneal/annealer.hpp"
#include "lanneal/fokker_planck.hpp"
#include "lanneal/potentials.hpp"
#include "lanneal/schedules.hpp"

namespace lanneal {

// ---------------------------------------------------------------- Lyapunov

/// Constants of R_eps = s U + |y|^2/2 + delta(eps) x.y, s = sigma/eps.
struct LyapunovParams {
  double a1 = 0.0;
  double l = 0.0;
  double r = 0.0;
  double M = 0.0;

  /// Reads a1, r, M from the model's growth constants and l from the variance map.
  static LyapunovParams from(const PotentialModel& model, const VarianceMap& var);

  /// delta^{-1} = 4 (1 + 1/sqrt(a1 l)) (1 + eps / (2 r sigma^3)).
  [[nodiscard]] double delta(double eps, double sigma) const noexcept;
};

double lyapunov_value(const LyapunovParams& p, const PotentialModel& model, const VarianceMap& var, double eps,
                      std::span<const double> x, std::span<const double> y);

/// Kinetic generator applied to R_eps in closed form:
///   L R = delta |y|^2 - |y|^2/sigma - (delta/sigma) x.y - s delta grad U.x + d.
double lyapunov_generator(const LyapunovParams& p, const PotentialModel& model, const VarianceMap& var, double eps,
                          std::span<const double> x, std::span<const double> y);

struct LyapunovReport {
  double eps = 0.0;
  double sigma = 0.0;
  double delta = 0.0;
  double rho_hat = 0.0;
  double N_hat = 0.0;
  double max_drift = 0.0;  // max of L R + rho eps^2 R at rho_hat
  Point argmax_x, argmax_y;
  std::size_t samples = 0;
  // Sandwich c (U + |y|^2) - N <= R <= C (s U + |y|^2) + N.
  double c = 0.0;
  double C = 0.0;
  double N_sandwich = 0.0;
  bool sandwich_ok = false;
  std::size_t sandwich_violations = 0;
};

/// Sobol samples over x in `x_box` (default: model domain) and y in [-y_range, y_range]^d.
/// rho_hat is the largest of 32 log-spaced candidates in [1e-6, 10] whose maximiser
/// of L R + rho eps^2 R lies inside the central 90% of the box; N_hat = max * eps / sigma.
/// Throws NumericalError when no candidate qualifies.
LyapunovReport check_lyapunov_drift(const PotentialModel& model, const VarianceMap& var, double eps, std::size_t n,
                                    double y_range = 5.0, const Box* x_box = nullptr);

// ----------------------------------------------------------------- moments

struct MomentSample {
  double t = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

struct MomentSeries {
  int p = 1;
  double shift = 0.0;  // min U subtracted from U
  std::vector<MomentSample> samples;
  double exponent = 0.0;
};

/// Least-squares slope of ln(estimate) against ln(1 + t) over the tail half of
/// the samples with t >= t_min. Needs at least 4 samples overall.
double fit_growth_exponent(const std::vector<MomentSample>& samples, double t_min = 0.0);

/// Per-checkpoint ensemble mean of (U - min_U + |Y|^2)^p with its standard error.
MomentSeries track_moments(const std::vector<TrialReport>& trials, int p, double min_U, double t_min = 0.0);

// -------------------------------------------------------------- Gibbs tail

struct GibbsTail {
  double Z = 0.0;       // integral of exp(-U/eps) over the grid box
  double log_Z = 0.0;
  double tail_mass = 0.0;
  double scaled_tail = 0.0;  // exp(delta/eps) * tail_mass
  double truncation_estimate = 0.0;  // relative to Z
};

/// Trapezoid quadrature of the position marginal (d = 1 or 2). In d = 1 the
/// tail integral splits the cells cut by the level set {U = min U + delta}.
/// Throws NumericalError when the estimated mass beyond the box exceeds 1e-6 Z.
GibbsTail gibbs_tail(const PotentialModel& model, double eps, double delta, const GridSpec& quad);

// ------------------------------------------------------------ Gamma checks

enum class GammaFunctional { Phi0, Phi1, Phi2, Psi };
std::string to_string(GammaFunctional w);
GammaFunctional parse_gamma_functional(const std::string& s);

struct GammaReport {
  GammaFunctional which = GammaFunctional::Psi;
  double min_slack = 0.0;
  std::size_t argmin_i = 0, argmin_j = 0;
  double max_abs_residual = 0.0;  // identity checks only (Phi0)
  double C_h = 0.0;
  double tol = 0.0;
  bool interior_pass = false;
  std::size_t points = 0;
  double beta = 0.0;
};

/// beta = 1/2 + (s ||U''|| + 1 + 1/sigma)^2, the constant of the Psi functional.
double gamma_beta(const DiscreteGenerator& gen) noexcept;

/// Gamma_{L*,Phi}(h) = (L* Phi(h) - DPhi(h).L* h) / 2 from centred differences,
/// compared against its lower bound on interior points (3-cell layer excluded):
///   Phi0: Gamma - h_y^2/(2h) = 0
///   Phi1: Gamma - (h_x + h_y)(h_x + (1/sigma - s U'') h_y)/h >= 0
///   Phi2: Gamma + (s ||U''|| + 1 + 1/sigma) Phi2 >= 0
///   Psi : Gamma_{Psi} - Phi2/2 >= 0,  Psi = Phi1 + beta Phi0
/// tol = safety * C_h (dx^2 + dy^2) plus a round-off floor, with C_h from a
/// Richardson comparison against the doubled stencil.
GammaReport gamma_check(std::span<const double> h, const DiscreteGenerator& gen, GammaFunctional which,
                        double safety = 4.0);

struct ResidualReport {
  double max_abs_residual = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::size_t points = 0;
};

/// Gamma_{L*,|d_y .|^2}(h) - [Gamma(h_y) + h_y [L*, d_y] h] on interior points.
ResidualReport quadratic_lemma_check(std::span<const double> h, const DiscreteGenerator& gen, double safety = 4.0);

/// (L*(f^2) - 2 f L* f)/2 - |d_y f|^2 on interior points.
ResidualReport carre_du_champ_check(std::span<const double> f, const DiscreteGenerator& gen, double safety = 4.0);

}  // namespace lanneal
