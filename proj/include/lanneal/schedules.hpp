#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace lanneal {

enum class ScheduleForm { logarithmic, constant, table };

/// Temperature schedule t -> eps_t.
///
/// logarithmic: eps_t = E / (A + ln(1 + t)).
/// constant:    eps_t = eps0.
/// table:       ln eps linear in t between knots, constant after the last knot.
class CoolingSchedule {
 public:
  static CoolingSchedule logarithmic(double E, double A = 1.0);
  static CoolingSchedule constant(double eps);
  /// Knots (t, eps) with strictly increasing t starting at t = 0. `E` is the
  /// energy scale the table claims, used by the admissibility check.
  static CoolingSchedule table(std::vector<std::pair<double, double>> knots, double E);

  [[nodiscard]] double epsilon_at(double t) const noexcept;
  /// d/dt (1/eps_t); for tables the interpolant's right derivative.
  [[nodiscard]] double inverse_derivative(double t) const noexcept;

  [[nodiscard]] ScheduleForm form() const noexcept { return form_; }
  [[nodiscard]] double E() const noexcept { return E_; }
  [[nodiscard]] double A() const noexcept { return A_; }
  [[nodiscard]] double eps0() const noexcept { return epsilon_at(0.0); }
  [[nodiscard]] const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }

 private:
  CoolingSchedule() = default;
  [[nodiscard]] std::size_t segment(double t) const noexcept;

  ScheduleForm form_ = ScheduleForm::logarithmic;
  double E_ = 1.0;
  double A_ = 1.0;
  double eps_const_ = 1.0;
  std::vector<std::pair<double, double>> knots_;
  std::vector<double> log_eps_;
  std::vector<double> slopes_;
};

enum class VarianceForm { identity, affine, constant };

/// sigma(eps): identity eps, affine l*eps + c, or a constant value.
class VarianceMap {
 public:
  static VarianceMap identity();
  static VarianceMap affine(double l, double c);
  /// sigma = value; `l` is the claimed lower slope (checked on (0, eps0]).
  static VarianceMap constant(double value, double l);

  [[nodiscard]] double sigma(double eps) const noexcept;
  [[nodiscard]] double dsigma(double eps) const noexcept;
  [[nodiscard]] VarianceForm form() const noexcept { return form_; }
  /// Lower slope: sigma(eps) >= l * eps.
  [[nodiscard]] double l() const noexcept { return l_; }
  [[nodiscard]] double offset() const noexcept { return c_; }

 private:
  VarianceForm form_ = VarianceForm::identity;
  double l_ = 1.0;
  double c_ = 0.0;
};

struct Certificate {
  bool admissible = false;
  std::vector<std::string> violations;
  std::vector<std::string> notes;
  std::size_t samples = 0;
};

/// Finite-sample admissibility check:
///   (i) E > E_star, (ii) d/dt(1/eps_t) <= 1/(E t) on a log grid of [1, horizon],
///   (iii) eps non-increasing on the samples, (iv) sigma(eps) >= l eps on the samples.
Certificate validate(const CoolingSchedule& s, const VarianceMap& v, double E_star, double horizon,
                     std::size_t n_checks);

enum class Trend { decreasing, flat, increasing, mixed };
std::string to_string(Trend t);
std::string to_string(ScheduleForm f);
std::string to_string(VarianceForm f);

struct SubexponentialReport {
  std::vector<double> eps;
  std::vector<double> values;  // eps * ln f(eps)
  double tail_max_abs = 0.0;   // over the second half of the grid
  Trend trend = Trend::flat;   // of |eps ln f| along the grid
};

/// Tabulates eps * ln f(eps) on a strictly decreasing positive grid. Diagnostic only.
SubexponentialReport subexponential_probe(const std::function<double(double)>& f,
                                          const std::vector<double>& eps_grid);

}  // namespace lanneal
