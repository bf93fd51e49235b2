#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace fuseval {

struct ContingencyTable {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> counts;  // row-major, all >= 0

  double at(std::size_t r, std::size_t c) const {
    return counts[r * n_cols + c];
  }
};

// Plain CSV of counts, no header: one table row per line.
ContingencyTable parse_contingency_csv(std::string_view text);

struct TestResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

// Pearson chi-square independence test. Expected counts come from the
// row/column marginals; dof = (r-1)(c-1); the p-value is the upper tail
// Q(dof/2, statistic/2) of the chi-square distribution.
TestResult chi_square_independence(const ContingencyTable& table);

// Regularized upper incomplete gamma Q(a, x), series/continued-fraction
// evaluation. Absolute accuracy well below 1e-8 over the tested domain.
double regularized_gamma_q(double a, double x);

}  // namespace fuseval
