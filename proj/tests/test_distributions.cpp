#include <doctest.h>

#include <cmath>

#include "contagion/distributions.hpp"

using namespace contagion;

namespace {

double t_pdf(double x, double df) {
  return std::exp(std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0)) /
         std::sqrt(df * 3.14159265358979323846) *
         std::pow(1.0 + x * x / df, -(df + 1.0) / 2.0);
}

double simpson(double (*f)(double, double), double df, double a, double b) {
  const double m = 0.5 * (a + b);
  return (b - a) / 6.0 * (f(a, df) + 4.0 * f(m, df) + f(b, df));
}

double adaptive(double (*f)(double, double), double df, double a, double b, double whole,
                double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = simpson(f, df, a, m);
  const double right = simpson(f, df, m, b);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive(f, df, a, m, left, tol / 2.0, depth - 1) +
         adaptive(f, df, m, b, right, tol / 2.0, depth - 1);
}

// Independent oracle: two-sided t p-value by quadrature of the density.
double t_two_sided_by_quadrature(double t, double df) {
  const double x = std::fabs(t);
  const double integral = adaptive(t_pdf, df, 0.0, x, simpson(t_pdf, df, 0.0, x), 1e-14, 40);
  return 1.0 - 2.0 * integral;
}

}  // namespace

TEST_CASE("incomplete gamma against analytic special cases") {
  for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    CHECK(gamma_q(1.0, x) == doctest::Approx(std::exp(-x)).epsilon(1e-12));
    CHECK(gamma_q(0.5, x) == doctest::Approx(std::erfc(std::sqrt(x))).epsilon(1e-12));
    CHECK(gamma_p(1.0, x) + gamma_q(1.0, x) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(gamma_p(3.0, 0.0) == 0.0);
  CHECK(gamma_q(3.0, 0.0) == 1.0);
}

TEST_CASE("incomplete beta against analytic special cases") {
  for (double x : {0.05, 0.3, 0.5, 0.8, 0.99}) {
    CHECK(incomplete_beta(x, 1.0, 3.0) ==
          doctest::Approx(1.0 - std::pow(1.0 - x, 3.0)).epsilon(1e-12));
    CHECK(incomplete_beta(x, 4.0, 1.0) == doctest::Approx(std::pow(x, 4.0)).epsilon(1e-12));
    CHECK(incomplete_beta(x, 2.5, 1.5) ==
          doctest::Approx(1.0 - incomplete_beta(1.0 - x, 1.5, 2.5)).epsilon(1e-12));
  }
  CHECK(incomplete_beta(0.0, 2.0, 2.0) == 0.0);
  CHECK(incomplete_beta(1.0, 2.0, 2.0) == 1.0);
}

TEST_CASE("chi-squared tail matches published critical values") {
  // NIST chi-squared quantile table: upper-tail p at tabulated critical values
  struct Row {
    double stat;
    double df;
    double p;
  };
  const Row rows[] = {
      {3.841, 1, 0.05},  {6.635, 1, 0.01},   {5.991, 2, 0.05},  {14.067, 7, 0.05},
      {20.090, 8, 0.01}, {18.307, 10, 0.05}, {31.410, 20, 0.05}, {29.588, 10, 0.001},
  };
  for (const auto& row : rows) {
    CHECK(chi_squared_tail(row.stat, row.df) == doctest::Approx(row.p).epsilon(2e-3));
  }
  CHECK(chi_squared_tail(0.0, 5.0) == doctest::Approx(1.0));
  CHECK(chi_squared_tail(-1.0, 5.0) == 1.0);
}

TEST_CASE("student t two-sided p matches quadrature oracle") {
  for (double df : {1.0, 2.0, 5.0, 8.0, 30.0, 651.26}) {
    for (double t : {0.0, 0.5, 1.0, 2.0, 3.5}) {
      const double expected = t == 0.0 ? 1.0 : t_two_sided_by_quadrature(t, df);
      CHECK(student_t_two_sided_p(t, df) == doctest::Approx(expected).epsilon(1e-10));
      CHECK(student_t_two_sided_p(-t, df) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("student t cdf basics") {
  CHECK(student_t_cdf(0.0, 7.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(student_t_cdf(100.0, 7.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(student_t_cdf(-2.0, 9.0) ==
        doctest::Approx(1.0 - student_t_cdf(2.0, 9.0)).epsilon(1e-12));
}

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(normal_cdf(1.0) + normal_cdf(-1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
}

TEST_CASE("poisson pmf and cdf") {
  CHECK(poisson_pmf(0, 4.0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));
  CHECK(poisson_pmf(3, 2.5) ==
        doctest::Approx(std::exp(-2.5) * 2.5 * 2.5 * 2.5 / 6.0).epsilon(1e-12));
  double acc = 0.0;
  for (int k = 0; k <= 10; ++k) acc += poisson_pmf(k, 3.0);
  CHECK(poisson_cdf(10, 3.0) == doctest::Approx(acc).epsilon(1e-10));
  CHECK(poisson_cdf(-1, 3.0) == 0.0);
}
