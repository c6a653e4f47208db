#include "lanneal/schedules.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "lanneal/error.hpp"

namespace lanneal {

CoolingSchedule CoolingSchedule::logarithmic(double E, double A) {
  if (!(E > 0.0) || !std::isfinite(E)) throw ConfigError("schedule.E must be positive");
  if (!(A > 0.0) || !std::isfinite(A)) throw ConfigError("schedule.A must be positive");
  CoolingSchedule s;
  s.form_ = ScheduleForm::logarithmic;
  s.E_ = E;
  s.A_ = A;
  return s;
}

CoolingSchedule CoolingSchedule::constant(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("constant schedule needs eps > 0");
  CoolingSchedule s;
  s.form_ = ScheduleForm::constant;
  s.eps_const_ = eps;
  s.E_ = eps;
  s.A_ = 1.0;
  return s;
}

CoolingSchedule CoolingSchedule::table(std::vector<std::pair<double, double>> knots, double E) {
  if (knots.empty()) throw ConfigError("table schedule needs at least one knot");
  if (knots.front().first != 0.0) throw ConfigError("table schedule must start at t = 0");
  if (!(E > 0.0)) throw ConfigError("table schedule needs E > 0");
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (!(knots[k].second > 0.0) || !std::isfinite(knots[k].second)) {
      throw ConfigError("table schedule values must be positive");
    }
    if (k > 0 && !(knots[k].first > knots[k - 1].first)) {
      throw ConfigError("table schedule times must be strictly increasing");
    }
  }
  CoolingSchedule s;
  s.form_ = ScheduleForm::table;
  s.E_ = E;
  s.knots_ = std::move(knots);
  for (const auto& [t, e] : s.knots_) s.log_eps_.push_back(std::log(e));
  for (std::size_t k = 0; k + 1 < s.knots_.size(); ++k) {
    s.slopes_.push_back((s.log_eps_[k + 1] - s.log_eps_[k]) / (s.knots_[k + 1].first - s.knots_[k].first));
  }
  return s;
}

std::size_t CoolingSchedule::segment(double t) const noexcept {
  // Index k with knots[k].t <= t < knots[k+1].t; last index past the final knot.
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double v, const std::pair<double, double>& kn) { return v < kn.first; });
  return it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
}

double CoolingSchedule::epsilon_at(double t) const noexcept {
  switch (form_) {
    case ScheduleForm::logarithmic:
      return E_ / (A_ + std::log1p(t));
    case ScheduleForm::constant:
      return eps_const_;
    case ScheduleForm::table: {
      const std::size_t k = segment(t);
      if (k + 1 >= knots_.size()) return knots_.back().second;
      return std::exp(log_eps_[k] + slopes_[k] * (t - knots_[k].first));
    }
  }
  return eps_const_;
}

double CoolingSchedule::inverse_derivative(double t) const noexcept {
  switch (form_) {
    case ScheduleForm::logarithmic:
      return 1.0 / (E_ * (1.0 + t));
    case ScheduleForm::constant:
      return 0.0;
    case ScheduleForm::table: {
      const std::size_t k = segment(t);
      if (k + 1 >= knots_.size()) return 0.0;
      return -slopes_[k] / epsilon_at(t);
    }
  }
  return 0.0;
}

VarianceMap VarianceMap::identity() {
  return VarianceMap{};
}

VarianceMap VarianceMap::affine(double l, double c) {
  if (!(l > 0.0)) throw ConfigError("variance.l must be positive");
  if (!(c >= 0.0)) throw ConfigError("affine variance offset must be non-negative");
  VarianceMap v;
  v.form_ = VarianceForm::affine;
  v.l_ = l;
  v.c_ = c;
  return v;
}

VarianceMap VarianceMap::constant(double value, double l) {
  if (!(value > 0.0)) throw ConfigError("constant variance must be positive");
  if (!(l > 0.0)) throw ConfigError("variance.l must be positive");
  VarianceMap v;
  v.form_ = VarianceForm::constant;
  v.l_ = l;
  v.c_ = value;
  return v;
}

double VarianceMap::sigma(double eps) const noexcept {
  switch (form_) {
    case VarianceForm::identity:
      return eps;
    case VarianceForm::affine:
      return l_ * eps + c_;
    case VarianceForm::constant:
      return c_;
  }
  return eps;
}

double VarianceMap::dsigma(double) const noexcept {
  switch (form_) {
    case VarianceForm::identity:
      return 1.0;
    case VarianceForm::affine:
      return l_;
    case VarianceForm::constant:
      return 0.0;
  }
  return 1.0;
}

Certificate validate(const CoolingSchedule& s, const VarianceMap& v, double E_star, double horizon,
                     std::size_t n_checks) {
  if (!(E_star >= 0.0)) throw ConfigError("E_star must be non-negative");
  if (!(horizon >= 1.0)) throw ConfigError("validation horizon must be at least 1");
  n_checks = std::max<std::size_t>(n_checks, 2);

  Certificate cert;
  cert.notes.push_back("conditions are checked on a finite sample grid only; this is a sanity gate, not a proof");
  cert.notes.push_back("the derivative condition is checked from t = 1, stricter than 'for t large enough'");

  if (s.form() == ScheduleForm::constant) {
    cert.notes.push_back("constant schedule: the energy-scale condition E > E* does not apply");
  } else if (!(s.E() > E_star)) {
    cert.violations.push_back(fmt::format("E <= E_*: E = {:.6g}, E_* = {:.6g}", s.E(), E_star));
  }

  // Relative slack absorbs round-off in the closed-form comparison.
  constexpr double kRoundOff = 1e-12;
  const double log_h = std::log(horizon);
  std::size_t bad_derivative = 0, bad_monotone = 0, bad_variance = 0;
  double first_bad_t = 0.0;
  double prev_eps = s.eps0();
  auto check_sigma = [&](double eps) {
    if (v.sigma(eps) < v.l() * eps * (1.0 - kRoundOff) || !std::isfinite(v.sigma(eps)) ||
        !std::isfinite(v.dsigma(eps))) {
      ++bad_variance;
    }
  };
  check_sigma(prev_eps);
  for (std::size_t k = 0; k < n_checks; ++k) {
    const double t = std::exp(log_h * static_cast<double>(k) / static_cast<double>(n_checks - 1));
    const double eps = s.epsilon_at(t);
    const double lhs = s.inverse_derivative(t);
    const double rhs = 1.0 / (s.E() * t);
    if (lhs > rhs * (1.0 + kRoundOff)) {
      if (bad_derivative == 0) first_bad_t = t;
      ++bad_derivative;
    }
    if (!(eps > 0.0) || eps > prev_eps * (1.0 + kRoundOff)) ++bad_monotone;
    check_sigma(eps);
    prev_eps = eps;
  }
  cert.samples = n_checks;
  if (bad_derivative > 0) {
    cert.violations.push_back(fmt::format(
        "(1/eps_t)' > 1/(E t) at {} of {} sampled times (first at t = {:.6g})", bad_derivative, n_checks, first_bad_t));
  }
  if (bad_monotone > 0) {
    cert.violations.push_back(fmt::format("eps_t increases at {} sampled times", bad_monotone));
  }
  if (bad_variance > 0) {
    cert.violations.push_back(fmt::format("sigma(eps) < l eps at {} sampled temperatures", bad_variance));
  }
  cert.admissible = cert.violations.empty();
  return cert;
}

std::string to_string(Trend t) {
  switch (t) {
    case Trend::decreasing:
      return "decreasing";
    case Trend::flat:
      return "flat";
    case Trend::increasing:
      return "increasing";
    case Trend::mixed:
      return "mixed";
  }
  return "mixed";
}

std::string to_string(ScheduleForm f) {
  switch (f) {
    case ScheduleForm::logarithmic:
      return "logarithmic";
    case ScheduleForm::constant:
      return "constant";
    case ScheduleForm::table:
      return "table";
  }
  return "logarithmic";
}

std::string to_string(VarianceForm f) {
  switch (f) {
    case VarianceForm::identity:
      return "identity";
    case VarianceForm::affine:
      return "affine";
    case VarianceForm::constant:
      return "constant";
  }
  return "identity";
}

SubexponentialReport subexponential_probe(const std::function<double(double)>& f,
                                          const std::vector<double>& eps_grid) {
  if (eps_grid.empty()) throw ConfigError("subexponential probe needs a non-empty grid");
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    if (!(eps_grid[k] > 0.0)) throw ConfigError("probe grid values must be positive");
    if (k > 0 && !(eps_grid[k] < eps_grid[k - 1])) throw ConfigError("probe grid must be strictly decreasing");
  }
  SubexponentialReport rep;
  rep.eps = eps_grid;
  for (double e : eps_grid) {
    const double fv = f(e);
    if (!(fv > 0.0)) throw NumericalError(fmt::format("probe function is non-positive at eps = {:.6g}", e));
    rep.values.push_back(e * std::log(fv));
  }
  for (std::size_t k = rep.values.size() / 2; k < rep.values.size(); ++k) {
    rep.tail_max_abs = std::max(rep.tail_max_abs, std::abs(rep.values[k]));
  }
  bool up = false, down = false;
  for (std::size_t k = 1; k < rep.values.size(); ++k) {
    const double a = std::abs(rep.values[k - 1]);
    const double b = std::abs(rep.values[k]);
    const double tol = 1e-12 * std::max(1.0, std::max(a, b));
    if (b > a + tol) up = true;
    if (b < a - tol) down = true;
  }
  rep.trend = up && down ? Trend::mixed : up ? Trend::increasing : down ? Trend::decreasing : Trend::flat;
  return rep;
}

}  // namespace lanneal
