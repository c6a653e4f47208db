#include "lanneal/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include <fmt/core.h>

#include "lanneal/error.hpp"

namespace lanneal {

// -- Box ----------------------------------------------------------------------

Box Box::cube(std::size_t dim, double lo, double hi) {
  return Box{Point(dim, lo), Point(dim, hi)};
}

double Box::radius() const noexcept {
  double sq = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) {
    const double m = std::max(std::abs(lo[k]), std::abs(hi[k]));
    sq += m * m;
  }
  return std::sqrt(sq);
}

bool Box::contains(std::span<const double> x) const noexcept {
  for (std::size_t k = 0; k < dim(); ++k) {
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  }
  return true;
}

// -- Landscape ----------------------------------------------------------------

void Landscape::hessian(std::span<const double> x, std::span<double> h) const {
  const std::size_t d = dim();
  Point xp(x.begin(), x.end());
  Point gp(d), gm(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double step = 1e-5 * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + step;
    gradient(xp, gp);
    xp[j] = x[j] - step;
    gradient(xp, gm);
    xp[j] = x[j];
    for (std::size_t i = 0; i < d; ++i) h[i * d + j] = (gp[i] - gm[i]) / (2.0 * step);
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double sym = 0.5 * (h[i * d + j] + h[j * d + i]);
      h[i * d + j] = sym;
      h[j * d + i] = sym;
    }
  }
}

namespace {

double ipow(double base, int e) noexcept {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}

}  // namespace

Polynomial::Polynomial(std::size_t dim, std::vector<Term> terms) : dim_(dim), terms_(std::move(terms)) {
  if (dim_ < 1 || dim_ > 2) throw ConfigError("polynomial potentials support dimension 1 or 2");
  for (const auto& t : terms_) {
    if (t.power[0] < 0 || t.power[1] < 0) throw ConfigError("polynomial powers must be non-negative");
    if (dim_ == 1 && t.power[1] != 0) throw ConfigError("1-D polynomial term uses a second variable");
  }
  if (dim_ == 1) {
    int degree = 0;
    for (const auto& t : terms_) degree = std::max(degree, t.power[0]);
    dense_.assign(static_cast<std::size_t>(degree) + 1, 0.0);
    for (const auto& t : terms_) dense_[static_cast<std::size_t>(t.power[0])] += t.coef;
  }
}

Polynomial Polynomial::from_coefficients(std::vector<double> coefficients) {
  std::vector<Term> terms;
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    if (coefficients[k] != 0.0) terms.push_back({coefficients[k], {static_cast<int>(k), 0}});
  }
  return Polynomial(1, std::move(terms));
}

double Polynomial::energy(std::span<const double> x) const {
  if (dim_ == 1) {
    double acc = 0.0;
    for (auto it = dense_.rbegin(); it != dense_.rend(); ++it) acc = acc * x[0] + *it;
    return acc;
  }
  double acc = 0.0;
  for (const auto& t : terms_) acc += t.coef * ipow(x[0], t.power[0]) * ipow(x[1], t.power[1]);
  return acc;
}

void Polynomial::gradient(std::span<const double> x, std::span<double> g) const {
  if (dim_ == 1) {
    double acc = 0.0;
    for (std::size_t k = dense_.size(); k-- > 1;) acc = acc * x[0] + static_cast<double>(k) * dense_[k];
    g[0] = acc;
    return;
  }
  g[0] = 0.0;
  g[1] = 0.0;
  for (const auto& t : terms_) {
    const auto [p, q] = t.power;
    if (p > 0) g[0] += t.coef * p * ipow(x[0], p - 1) * ipow(x[1], q);
    if (q > 0) g[1] += t.coef * q * ipow(x[0], p) * ipow(x[1], q - 1);
  }
}

void Polynomial::hessian(std::span<const double> x, std::span<double> h) const {
  if (dim_ == 1) {
    double acc = 0.0;
    for (std::size_t k = dense_.size(); k-- > 2;) {
      acc = acc * x[0] + static_cast<double>(k * (k - 1)) * dense_[k];
    }
    h[0] = acc;
    return;
  }
  std::fill(h.begin(), h.begin() + 4, 0.0);
  for (const auto& t : terms_) {
    const auto [p, q] = t.power;
    if (p > 1) h[0] += t.coef * p * (p - 1) * ipow(x[0], p - 2) * ipow(x[1], q);
    if (p > 0 && q > 0) h[1] += t.coef * p * q * ipow(x[0], p - 1) * ipow(x[1], q - 1);
    if (q > 1) h[3] += t.coef * q * (q - 1) * ipow(x[0], p) * ipow(x[1], q - 2);
  }
  h[2] = h[1];
}

FunctionLandscape::FunctionLandscape(std::size_t dim, EnergyFn energy, GradientFn gradient)
    : dim_(dim), energy_(std::move(energy)), gradient_(std::move(gradient)) {
  if (dim_ == 0) throw ConfigError("landscape dimension must be positive");
}

// -- grid helpers ---------------------------------------------------------------

namespace {

/// Node grid over a box, row-major with the last axis fastest.
class NodeGrid {
 public:
  NodeGrid(const Box& box, double spacing) : box_(box), spacing_(spacing) {
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw ConfigError("grid spacing must be positive");
    if (box.dim() == 0 || box.dim() > 2) throw ConfigError("landscape grids support dimension 1 or 2");
    for (std::size_t k = 0; k < box.dim(); ++k) {
      const double width = box.hi[k] - box.lo[k];
      if (!(width > 0.0)) throw ConfigError("empty grid: box has non-positive width");
      const auto n = static_cast<std::size_t>(std::floor(width / spacing + 1e-9)) + 1;
      if (n < 3) throw ConfigError("empty grid: fewer than three nodes per axis");
      counts_.push_back(n);
    }
    total_ = std::accumulate(counts_.begin(), counts_.end(), std::size_t{1}, std::multiplies<>());
  }

  [[nodiscard]] std::size_t dim() const noexcept { return counts_.size(); }
  [[nodiscard]] std::size_t size() const noexcept { return total_; }
  [[nodiscard]] std::size_t count(std::size_t axis) const noexcept { return counts_[axis]; }
  [[nodiscard]] double spacing() const noexcept { return spacing_; }

  [[nodiscard]] std::array<std::size_t, 2> unravel(std::size_t idx) const noexcept {
    if (dim() == 1) return {idx, 0};
    return {idx / counts_[1], idx % counts_[1]};
  }
  [[nodiscard]] std::size_t ravel(std::array<std::size_t, 2> c) const noexcept {
    return dim() == 1 ? c[0] : c[0] * counts_[1] + c[1];
  }
  void node(std::size_t idx, std::span<double> x) const noexcept {
    const auto c = unravel(idx);
    for (std::size_t k = 0; k < dim(); ++k) x[k] = box_.lo[k] + static_cast<double>(c[k]) * spacing_;
  }
  [[nodiscard]] bool on_boundary(std::size_t idx) const noexcept {
    const auto c = unravel(idx);
    for (std::size_t k = 0; k < dim(); ++k) {
      if (c[k] == 0 || c[k] + 1 == counts_[k]) return true;
    }
    return false;
  }
  /// Nearest node to x (clamped into the box).
  [[nodiscard]] std::size_t nearest(std::span<const double> x) const noexcept {
    std::array<std::size_t, 2> c{0, 0};
    for (std::size_t k = 0; k < dim(); ++k) {
      const double f = std::round((x[k] - box_.lo[k]) / spacing_);
      c[k] = static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(counts_[k] - 1)));
    }
    return ravel(c);
  }
  /// Axis neighbours (2d of them in the interior).
  template <typename F>
  void for_axis_neighbours(std::size_t idx, F&& f) const {
    const auto c = unravel(idx);
    for (std::size_t k = 0; k < dim(); ++k) {
      if (c[k] > 0) {
        auto n = c;
        --n[k];
        f(ravel(n));
      }
      if (c[k] + 1 < counts_[k]) {
        auto n = c;
        ++n[k];
        f(ravel(n));
      }
    }
  }
  /// Full neighbourhood (3^d - 1 nodes in the interior).
  template <typename F>
  void for_all_neighbours(std::size_t idx, F&& f) const {
    const auto c = unravel(idx);
    const long n0 = static_cast<long>(counts_[0]);
    const long n1 = dim() == 2 ? static_cast<long>(counts_[1]) : 1;
    const long r1 = dim() == 2 ? 1 : 0;
    for (long di = -1; di <= 1; ++di) {
      for (long dj = -r1; dj <= r1; ++dj) {
        if (di == 0 && dj == 0) continue;
        const long i = static_cast<long>(c[0]) + di;
        const long j = static_cast<long>(c[1]) + dj;
        if (i < 0 || i >= n0 || j < 0 || j >= n1) continue;
        f(ravel({static_cast<std::size_t>(i), static_cast<std::size_t>(j)}));
      }
    }
  }

 private:
  Box box_;
  double spacing_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

double norm(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

struct DescentResult {
  Point x;
  double value;
  bool converged;
};

/// Gradient descent with Armijo backtracking. Near the optimum the energy
/// decrease drops below round-off; there a step is accepted if it shrinks |grad|.
DescentResult descend(const Landscape& u, Point x) {
  constexpr double kTol = 1e-8;
  constexpr int kMaxIter = 200000;
  const std::size_t d = x.size();
  Point g(d), xn(d), gn(d);
  u.gradient(x, g);
  double f = u.energy(x);
  double step = 0.1;
  for (int it = 0; it < kMaxIter; ++it) {
    const double gnorm = norm(g);
    if (gnorm < kTol) return {x, f, true};
    double t = step;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      for (std::size_t k = 0; k < d; ++k) xn[k] = x[k] - t * g[k];
      const double fn = u.energy(xn);
      if (fn <= f - 1e-4 * t * gnorm * gnorm) {
        accepted = true;
      } else {
        u.gradient(xn, gn);
        accepted = fn <= f + 1e-14 * std::max(1.0, std::abs(f)) && norm(gn) < gnorm;
      }
      if (accepted) {
        x.swap(xn);
        f = fn;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) return {x, f, false};
    u.gradient(x, g);
    step = std::min(2.0 * t, 1e3);
  }
  return {x, f, norm(g) < kTol};
}

}  // namespace

// -- PotentialModel -------------------------------------------------------------

double sampled_hessian_sup(const Landscape& landscape, const Box& box, std::size_t per_dim) {
  const std::size_t d = landscape.dim();
  if (box.dim() != d) throw ConfigError("box dimension does not match landscape");
  per_dim = std::max<std::size_t>(per_dim, 2);
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= per_dim;
  Point x(d), h(d * d);
  double sup = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (std::size_t k = d; k-- > 0;) {
      const std::size_t c = rem % per_dim;
      rem /= per_dim;
      x[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * static_cast<double>(c) / static_cast<double>(per_dim - 1);
    }
    // Always central differences: this estimate is used for custom landscapes.
    landscape.Landscape::hessian(x, h);
    sup = std::max(sup, norm(h));
  }
  return sup;
}

PotentialModel::PotentialModel(std::shared_ptr<const Landscape> landscape, Options options)
    : landscape_(std::move(landscape)),
      name_(std::move(options.name)),
      growth_(options.growth),
      domain_(std::move(options.domain)) {
  if (!landscape_) throw ConfigError("potential model requires a landscape");
  const std::size_t d = landscape_->dim();
  if (d == 0 || d > 2) throw ConfigError("potential models support dimension 1 or 2");
  if (domain_.dim() != d) throw ConfigError("potential domain dimension does not match the landscape");
  if (growth_) {
    const auto& gc = *growth_;
    if (!(gc.a1 > 0 && gc.a2 > 0 && gc.M > 0 && gc.r > 0)) {
      throw ConfigError("growth constants a1, a2, M, r must be positive");
    }
  }
  scan_spacing_ = options.scan_spacing > 0.0 ? options.scan_spacing : (d == 1 ? 1e-3 : 1e-2);

  if (options.hessian_sup_norm) {
    hessian_sup_ = *options.hessian_sup_norm;
  } else {
    const std::size_t per_dim = d == 1 ? 2001 : 121;
    hessian_sup_ = sampled_hessian_sup(*landscape_, domain_, per_dim);
    hessian_lower_bound_ = true;
    Box wide = domain_;
    for (std::size_t k = 0; k < d; ++k) {
      const double mid = 0.5 * (domain_.lo[k] + domain_.hi[k]);
      const double half = domain_.hi[k] - domain_.lo[k];
      wide.lo[k] = mid - half;
      wide.hi[k] = mid + half;
    }
    const double wide_sup = sampled_hessian_sup(*landscape_, wide, per_dim);
    hessian_growth_warning_ = wide_sup > 1.5 * hessian_sup_ + 1e-12;
  }

  const auto minima = find_local_minima(*this, default_grid());
  if (minima.empty()) throw NumericalError("no local minimum found in the potential domain");
  const auto best = std::min_element(minima.begin(), minima.end(),
                                     [](const Minimum& a, const Minimum& b) { return a.value < b.value; });
  global_min_value_ = best->value;
  global_minimizer_ = best->location;
}

double evaluate(const PotentialModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) {
    throw ConfigError(fmt::format("dimension mismatch: point has {} components, potential has {}", x.size(),
                                  model.dim()));
  }
  return model.energy(x);
}

namespace builtin {

PotentialModel quadratic(std::size_t dim, double c) {
  if (!(c > 0.0)) throw ConfigError("quadratic coefficient must be positive");
  std::vector<Polynomial::Term> terms;
  terms.push_back({c, {2, 0}});
  if (dim == 2) terms.push_back({c, {0, 2}});
  PotentialModel::Options o;
  o.name = "quadratic";
  o.growth = GrowthConstants{c, c, 0.01, 2.0 * c};
  o.hessian_sup_norm = 2.0 * c * std::sqrt(static_cast<double>(dim));
  o.domain = Box::cube(dim, -3.0, 3.0);
  return PotentialModel(std::make_shared<Polynomial>(dim, std::move(terms)), std::move(o));
}

PotentialModel tilted_double_well(double kappa) {
  if (std::abs(kappa) > 0.5) throw ConfigError("double-well tilt must satisfy |kappa| <= 0.5");
  PotentialModel::Options o;
  o.name = "tilted_double_well";
  // Certified on the domain box [-3, 3] for |kappa| <= 0.5.
  o.growth = GrowthConstants{0.5, 8.0, 2.0, 1.0};
  o.hessian_sup_norm = 12.0 * 9.0 - 4.0;
  o.domain = Box::cube(1, -3.0, 3.0);
  return PotentialModel(
      std::make_shared<Polynomial>(Polynomial::from_coefficients({1.0, kappa, -2.0, 0.0, 1.0})), std::move(o));
}

PotentialModel triple_well(double kappa) {
  if (std::abs(kappa) > 0.5) throw ConfigError("triple-well tilt must satisfy |kappa| <= 0.5");
  PotentialModel::Options o;
  o.name = "triple_well";
  o.growth = GrowthConstants{0.5, 20.0, 6.0, 1.0};
  // U'' = 30 x^4 - 48 x^2 + 8 is maximal on [-2.5, 2.5] at the endpoints.
  o.hessian_sup_norm = 30.0 * std::pow(2.5, 4) - 48.0 * 2.5 * 2.5 + 8.0;
  o.domain = Box::cube(1, -2.5, 2.5);
  return PotentialModel(
      std::make_shared<Polynomial>(Polynomial::from_coefficients({0.0, kappa, 4.0, 0.0, -4.0, 0.0, 1.0})),
      std::move(o));
}

PotentialModel two_well_2d(double kappa) {
  if (std::abs(kappa) > 0.5) throw ConfigError("two-well tilt must satisfy |kappa| <= 0.5");
  // (x^2 - 1)^2 + kappa x + (y - 0.3 x)^2
  std::vector<Polynomial::Term> terms{
      {1.0, {4, 0}}, {-2.0, {2, 0}}, {1.0, {0, 0}}, {kappa, {1, 0}},
      {1.0, {0, 2}}, {-0.6, {1, 1}}, {0.09, {2, 0}},
  };
  PotentialModel::Options o;
  o.name = "two_well_2d";
  o.growth = GrowthConstants{0.3, 8.0, 2.0, 0.5};
  // Frobenius norm of [[12x^2 - 3.82, -0.6], [-0.6, 2]] at |x| = 2.5.
  const double hxx = 12.0 * 6.25 - 4.0 + 0.18;
  o.hessian_sup_norm = std::sqrt(hxx * hxx + 2.0 * 0.36 + 4.0);
  o.domain = Box::cube(2, -2.5, 2.5);
  return PotentialModel(std::make_shared<Polynomial>(2, std::move(terms)), std::move(o));
}

PotentialModel polynomial(std::size_t dim, std::vector<Polynomial::Term> terms, Box domain,
                          std::optional<GrowthConstants> growth) {
  PotentialModel::Options o;
  o.name = "polynomial";
  o.growth = growth;
  o.domain = std::move(domain);
  return PotentialModel(std::make_shared<Polynomial>(dim, std::move(terms)), std::move(o));
}

std::vector<PotentialModel> suite() {
  return {quadratic(1), tilted_double_well(0.3), triple_well(0.3), two_well_2d(0.25)};
}

}  // namespace builtin

// -- growth -----------------------------------------------------------------------

GrowthReport verify_growth(const PotentialModel& model, const Box& domain, std::size_t n_samples) {
  if (n_samples < 1) throw ConfigError("verify_growth needs at least one sample");
  if (!model.growth()) throw ConfigError("potential has no growth constants");
  const std::size_t d = model.dim();
  if (domain.dim() != d) throw ConfigError("domain dimension does not match the potential");
  const auto& gc = *model.growth();

  const auto per_dim = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n_samples), 1.0 / static_cast<double>(d)))));
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= per_dim;

  GrowthReport rep;
  rep.worst_margins.fill(std::numeric_limits<double>::infinity());
  Point x(d), g(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (std::size_t k = d; k-- > 0;) {
      const std::size_t c = rem % per_dim;
      rem /= per_dim;
      x[k] = per_dim == 1 ? 0.5 * (domain.lo[k] + domain.hi[k])
                          : domain.lo[k] + (domain.hi[k] - domain.lo[k]) * static_cast<double>(c) /
                                               static_cast<double>(per_dim - 1);
    }
    const double u = model.energy(x);
    model.gradient(x, g);
    double r2 = 0.0, gx = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      r2 += x[k] * x[k];
      gx += g[k] * x[k];
    }
    rep.worst_margins[0] = std::min(rep.worst_margins[0], u - (gc.a1 * r2 - gc.M));
    rep.worst_margins[1] = std::min(rep.worst_margins[1], gc.a2 * r2 + gc.M - u);
    rep.worst_margins[2] = std::min(rep.worst_margins[2], gc.M - gc.r * r2 + gx);
  }
  rep.samples = total;
  rep.pass = std::all_of(rep.worst_margins.begin(), rep.worst_margins.end(), [](double m) { return m >= 0.0; });
  return rep;
}

// -- minima and depth -------------------------------------------------------------

std::vector<Minimum> find_local_minima(const PotentialModel& model, const GridSpec& grid) {
  if (grid.box.dim() != model.dim()) throw ConfigError("grid dimension does not match the potential");
  const NodeGrid nodes(grid.box, grid.spacing);
  const std::size_t d = model.dim();

  std::vector<double> values(nodes.size());
  Point x(d);
  for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
    nodes.node(idx, x);
    values[idx] = model.energy(x);
  }

  std::vector<Minimum> found;
  for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
    if (nodes.on_boundary(idx)) continue;
    bool is_min = true;
    nodes.for_all_neighbours(idx, [&](std::size_t n) {
      if (values[n] < values[idx]) is_min = false;
    });
    if (!is_min) continue;
    Minimum m;
    nodes.node(idx, x);
    m.grid_node = x;
    m.grid_value = values[idx];
    auto res = descend(model.landscape(), x);
    m.location = std::move(res.x);
    m.value = res.value;
    m.converged = res.converged;
    found.push_back(std::move(m));
  }

  // Merge duplicates: lowest value first, drop anything within 10 spacings of a kept point.
  std::stable_sort(found.begin(), found.end(),
                   [](const Minimum& a, const Minimum& b) { return a.value < b.value; });
  std::vector<Minimum> kept;
  const double merge_radius = 10.0 * grid.spacing;
  for (auto& m : found) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const Minimum& k) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += (k.location[c] - m.location[c]) * (k.location[c] - m.location[c]);
      return std::sqrt(s) < merge_radius;
    });
    if (!dup) kept.push_back(std::move(m));
  }
  if (!kept.empty()) {
    const double gmin = kept.front().value;
    for (auto& m : kept) m.is_global = m.value <= gmin + kGlobalValueTolerance;
  }
  // Report in spatial order (lexicographic) for stable output.
  std::sort(kept.begin(), kept.end(), [](const Minimum& a, const Minimum& b) { return a.location < b.location; });
  return kept;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t a) noexcept {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  /// Returns the surviving root.
  std::size_t unite(std::size_t a, std::size_t b) noexcept {
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace

LandscapeAnalysis analyze_landscape(const PotentialModel& model, const GridSpec& grid) {
  LandscapeAnalysis out;
  out.minima = find_local_minima(model, grid);
  out.grid_resolution = grid.spacing;
  if (out.minima.empty()) throw NumericalError("no grid-local minimum found; enlarge the grid box");

  const bool any_nonglobal =
      std::any_of(out.minima.begin(), out.minima.end(), [](const Minimum& m) { return !m.is_global; });
  if (!any_nonglobal) return out;

  const NodeGrid nodes(grid.box, grid.spacing);
  const std::size_t d = model.dim();
  std::vector<double> values(nodes.size());
  Point x(d);
  for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
    nodes.node(idx, x);
    values[idx] = model.energy(x);
  }

  // Each component tracks the minima that have not yet met a strictly lower one;
  // they all share (within tolerance) the component's lowest value.
  struct Pending {
    double lowest = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> minima;
  };
  std::vector<Pending> pending(nodes.size());
  std::vector<std::size_t> node_of_min(out.minima.size());
  for (std::size_t k = 0; k < out.minima.size(); ++k) {
    const std::size_t n = nodes.nearest(out.minima[k].location);
    node_of_min[k] = n;
    auto& p = pending[n];
    const double v = out.minima[k].value;
    if (v < p.lowest - kGlobalValueTolerance) {
      p.lowest = v;
      p.minima = {k};
    } else if (v <= p.lowest + kGlobalValueTolerance) {
      p.lowest = std::min(p.lowest, v);
      p.minima.push_back(k);
    }
    // A higher minimum mapped onto the same node as a lower one is resolved at once.
    else {
      out.minima[k].depth = values[n] - v;
    }
  }

  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  DisjointSets sets(nodes.size());
  std::vector<char> active(nodes.size(), 0);
  for (const std::size_t idx : order) {
    active[idx] = 1;
    const double level = values[idx];
    nodes.for_axis_neighbours(idx, [&](std::size_t nb) {
      if (!active[nb]) return;
      const std::size_t ra = sets.find(idx);
      const std::size_t rb = sets.find(nb);
      if (ra == rb) return;
      Pending a = std::move(pending[ra]);
      Pending b = std::move(pending[rb]);
      auto resolve = [&](Pending& higher) {
        for (std::size_t k : higher.minima) out.minima[k].depth = level - out.minima[k].value;
        higher.minima.clear();
      };
      Pending merged;
      if (a.lowest < b.lowest - kGlobalValueTolerance) {
        resolve(b);
        merged = std::move(a);
      } else if (b.lowest < a.lowest - kGlobalValueTolerance) {
        resolve(a);
        merged = std::move(b);
      } else {
        merged.lowest = std::min(a.lowest, b.lowest);
        merged.minima = std::move(a.minima);
        merged.minima.insert(merged.minima.end(), b.minima.begin(), b.minima.end());
      }
      const std::size_t root = sets.unite(ra, rb);
      pending[root] = std::move(merged);
    });
  }

  double best = -1.0;
  for (auto& m : out.minima) {
    if (m.is_global) {
      m.depth.reset();
      continue;
    }
    if (!m.depth) {
      throw NumericalError(fmt::format(
          "critical depth unresolved: minimum at x0={} never connects to a lower minimum on this grid",
          m.location[0]));
    }
    best = std::max(best, *m.depth);
  }
  out.critical_depth = best;
  return out;
}

std::optional<double> critical_depth(const PotentialModel& model, const GridSpec& grid) {
  return analyze_landscape(model, grid).critical_depth;
}

const Minimum* LandscapeAnalysis::deepest_nonglobal() const noexcept {
  const Minimum* best = nullptr;
  for (const auto& m : minima) {
    if (m.is_global || !m.depth) continue;
    if (!best || *m.depth > *best->depth) best = &m;
  }
  return best;
}

const Minimum& LandscapeAnalysis::global() const {
  for (const auto& m : minima) {
    if (m.is_global) return m;
  }
  throw NumericalError("landscape analysis has no global minimum");
}

}  // namespace lanneal
