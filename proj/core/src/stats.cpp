#include "fuseval/stats.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "fuseval/error.hpp"

namespace fuseval {

namespace {

// Lower regularized gamma P(a, x) by power series, for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma Q(a, x) by continued fraction (modified Lentz),
// for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (a <= 0.0) raise(ErrorKind::Argument, "gamma_q requires a > 0");
  if (x < 0.0) raise(ErrorKind::Argument, "gamma_q requires x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_contfrac(a, x);
}

ContingencyTable parse_contingency_csv(std::string_view text) {
  ContingencyTable table;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<double> row;
    std::size_t fs = 0;
    while (true) {
      std::size_t fe = line.find(',', fs);
      std::string_view field =
          fe == std::string_view::npos ? line.substr(fs) : line.substr(fs, fe - fs);
      double v = 0;
      auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size() || v < 0 ||
          !std::isfinite(v))
        raise(ErrorKind::Data, "contingency table: bad count `" +
                                   std::string(field) + "`");
      row.push_back(v);
      if (fe == std::string_view::npos) break;
      fs = fe + 1;
    }
    if (table.n_cols == 0)
      table.n_cols = row.size();
    else if (row.size() != table.n_cols)
      raise(ErrorKind::Data, "contingency table: ragged rows");
    table.counts.insert(table.counts.end(), row.begin(), row.end());
    ++table.n_rows;
  }
  return table;
}

TestResult chi_square_independence(const ContingencyTable& table) {
  const std::size_t r = table.n_rows;
  const std::size_t c = table.n_cols;
  if (r < 2 || c < 2)
    raise(ErrorKind::Argument,
          "chi-square needs at least a 2x2 table, got " + std::to_string(r) +
              "x" + std::to_string(c));

  std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double v = table.at(i, j);
      row_sum[i] += v;
      col_sum[j] += v;
      total += v;
    }
  for (double s : row_sum)
    if (s == 0.0) raise(ErrorKind::Argument, "chi-square: all-zero row");
  for (double s : col_sum)
    if (s == 0.0) raise(ErrorKind::Argument, "chi-square: all-zero column");

  double statistic = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      const double diff = table.at(i, j) - expected;
      statistic += diff * diff / expected;
    }

  TestResult result;
  result.statistic = statistic;
  result.dof = (r - 1) * (c - 1);
  result.p_value = regularized_gamma_q(static_cast<double>(result.dof) / 2.0,
                                       statistic / 2.0);
  return result;
}

}  // namespace fuseval
