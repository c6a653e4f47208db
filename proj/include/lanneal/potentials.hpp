#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lanneal {

using Point = std::vector<double>;

/// Axis-aligned box [lo, hi] in R^d.
struct Box {
  Point lo;
  Point hi;

  static Box cube(std::size_t dim, double lo, double hi);
  [[nodiscard]] std::size_t dim() const noexcept { return lo.size(); }
  /// Largest Euclidean norm of a corner.
  [[nodiscard]] double radius() const noexcept;
  [[nodiscard]] bool contains(std::span<const double> x) const noexcept;
};

/// Regular node grid covering a box: nodes at lo + k * spacing.
struct GridSpec {
  Box box;
  double spacing = 0.0;
};

/// Constants of the quadratic-growth condition
///   a1 |x|^2 - M <= U(x) <= a2 |x|^2 + M,   -grad U(x).x <= -r |x|^2 + M.
struct GrowthConstants {
  double a1 = 0.0;
  double a2 = 0.0;
  double M = 0.0;
  double r = 0.0;
};

/// Energy function with first derivatives. Implementations must be thread-safe.
class Landscape {
 public:
  virtual ~Landscape() = default;
  [[nodiscard]] virtual std::size_t dim() const noexcept = 0;
  [[nodiscard]] virtual double energy(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> g) const = 0;
  /// Row-major d x d Hessian. The default uses central differences of the gradient.
  virtual void hessian(std::span<const double> x, std::span<double> h) const;
  [[nodiscard]] virtual bool analytic_hessian() const noexcept { return false; }
};

/// Polynomial in one or two variables: sum of coef * x^p * y^q.
class Polynomial final : public Landscape {
 public:
  struct Term {
    double coef = 0.0;
    std::array<int, 2> power{0, 0};
  };

  Polynomial(std::size_t dim, std::vector<Term> terms);
  /// 1-D polynomial from ascending coefficients c0 + c1 x + c2 x^2 + ...
  static Polynomial from_coefficients(std::vector<double> coefficients);

  [[nodiscard]] std::size_t dim() const noexcept override { return dim_; }
  [[nodiscard]] double energy(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> g) const override;
  void hessian(std::span<const double> x, std::span<double> h) const override;
  [[nodiscard]] bool analytic_hessian() const noexcept override { return true; }
  [[nodiscard]] const std::vector<Term>& terms() const noexcept { return terms_; }
  /// Ascending coefficients of a 1-D polynomial (empty in 2-D).
  [[nodiscard]] const std::vector<double>& dense_coefficients() const noexcept { return dense_; }

 private:
  std::size_t dim_;
  std::vector<Term> terms_;
  // Dense ascending coefficients for the 1-D Horner fast path.
  std::vector<double> dense_;
};

/// Landscape backed by callables; mostly for tests and ad-hoc experiments.
class FunctionLandscape final : public Landscape {
 public:
  using EnergyFn = std::function<double(std::span<const double>)>;
  using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;

  FunctionLandscape(std::size_t dim, EnergyFn energy, GradientFn gradient);

  [[nodiscard]] std::size_t dim() const noexcept override { return dim_; }
  [[nodiscard]] double energy(std::span<const double> x) const override { return energy_(x); }
  void gradient(std::span<const double> x, std::span<double> g) const override { gradient_(x, g); }

 private:
  std::size_t dim_;
  EnergyFn energy_;
  GradientFn gradient_;
};

/// An energy landscape plus the metadata the annealing theory needs.
///
/// Immutable after construction; the global minimum is located once by a grid
/// scan of `domain` and cached.
class PotentialModel {
 public:
  struct Options {
    std::string name = "custom";
    std::optional<GrowthConstants> growth;
    /// Sup over the domain of the Frobenius norm of the Hessian. When absent it
    /// is estimated by sampling and flagged as a lower bound.
    std::optional<double> hessian_sup_norm;
    Box domain;
    /// Grid spacing used to locate the global minimum; 0 picks a default.
    double scan_spacing = 0.0;
  };

  PotentialModel(std::shared_ptr<const Landscape> landscape, Options options);

  [[nodiscard]] std::size_t dim() const noexcept { return landscape_->dim(); }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] double energy(std::span<const double> x) const { return landscape_->energy(x); }
  void gradient(std::span<const double> x, std::span<double> g) const { landscape_->gradient(x, g); }
  void hessian(std::span<const double> x, std::span<double> h) const { landscape_->hessian(x, h); }
  [[nodiscard]] const Landscape& landscape() const noexcept { return *landscape_; }

  [[nodiscard]] const std::optional<GrowthConstants>& growth() const noexcept { return growth_; }
  [[nodiscard]] double hessian_sup_norm() const noexcept { return hessian_sup_; }
  [[nodiscard]] bool hessian_is_lower_bound() const noexcept { return hessian_lower_bound_; }
  /// Set when the sampled Hessian bound keeps growing as the box is enlarged.
  [[nodiscard]] bool hessian_growth_warning() const noexcept { return hessian_growth_warning_; }
  [[nodiscard]] const Box& domain() const noexcept { return domain_; }
  [[nodiscard]] double default_spacing() const noexcept { return scan_spacing_; }
  [[nodiscard]] GridSpec default_grid() const { return {domain_, scan_spacing_}; }

  [[nodiscard]] double global_min_value() const noexcept { return global_min_value_; }
  [[nodiscard]] const Point& global_minimizer() const noexcept { return global_minimizer_; }

 private:
  std::shared_ptr<const Landscape> landscape_;
  std::string name_;
  std::optional<GrowthConstants> growth_;
  double hessian_sup_ = 0.0;
  bool hessian_lower_bound_ = false;
  bool hessian_growth_warning_ = false;
  Box domain_;
  double scan_spacing_ = 0.0;
  double global_min_value_ = 0.0;
  Point global_minimizer_;
};

/// U(x), with a dimension check.
double evaluate(const PotentialModel& model, std::span<const double> x);

/// Central-difference estimate of the Hessian Frobenius norm sup over a box.
double sampled_hessian_sup(const Landscape& landscape, const Box& box, std::size_t per_dim);

namespace builtin {

/// U(x) = c |x|^2.
PotentialModel quadratic(std::size_t dim = 1, double c = 1.0);
/// U(x) = (x^2 - 1)^2 + kappa x.
PotentialModel tilted_double_well(double kappa = 0.3);
/// U(x) = x^2 (x^2 - 2)^2 + kappa x, three wells near 0 and +-sqrt(2).
PotentialModel triple_well(double kappa = 0.3);
/// U(x1, x2) = (x1^2 - 1)^2 + kappa x1 + (x2 - 0.3 x1)^2.
PotentialModel two_well_2d(double kappa = 0.25);
/// Custom polynomial; Hessian bound sampled and flagged as a lower bound.
PotentialModel polynomial(std::size_t dim, std::vector<Polynomial::Term> terms, Box domain,
                          std::optional<GrowthConstants> growth = std::nullopt);

/// The built-in suite used by the diagnostics (names: quadratic, tilted_double_well,
/// triple_well, two_well_2d).
std::vector<PotentialModel> suite();

}  // namespace builtin

// -- growth verification -----------------------------------------------------

struct GrowthReport {
  bool pass = false;
  /// Tightest slack of: U - (a1|x|^2 - M), (a2|x|^2 + M) - U, M - r|x|^2 + grad U.x.
  std::array<double, 3> worst_margins{};
  std::size_t samples = 0;
};

/// Check the growth inequalities on a regular sample of `domain`
/// (round(n_samples^(1/d)) points per axis, endpoints included).
GrowthReport verify_growth(const PotentialModel& model, const Box& domain, std::size_t n_samples);

// -- landscape analysis --------------------------------------------------------

struct Minimum {
  Point location;
  double value = 0.0;
  bool is_global = false;
  /// Grid node the refinement started from.
  Point grid_node;
  double grid_value = 0.0;
  /// Barrier to the nearest strictly lower minimum; absent for global minima.
  std::optional<double> depth;
  bool converged = false;
};

struct LandscapeAnalysis {
  std::vector<Minimum> minima;
  std::optional<double> critical_depth;
  double grid_resolution = 0.0;

  /// Non-global minimum with the largest depth, if any.
  [[nodiscard]] const Minimum* deepest_nonglobal() const noexcept;
  [[nodiscard]] const Minimum& global() const;
};

inline constexpr double kGlobalValueTolerance = 1e-9;

/// Grid-local minima refined by backtracking gradient descent to |grad U| < 1e-8.
/// Minima closer than 10 grid spacings are merged (lowest kept).
std::vector<Minimum> find_local_minima(const PotentialModel& model, const GridSpec& grid);

/// Minima plus per-minimum depths from an axis-neighbour sublevel flood fill.
/// Throws NumericalError when a non-global minimum never connects to a lower one.
LandscapeAnalysis analyze_landscape(const PotentialModel& model, const GridSpec& grid);

/// Critical depth E*: the largest depth among non-global minima; absent if none.
std::optional<double> critical_depth(const PotentialModel& model, const GridSpec& grid);

}  // namespace lanneal
