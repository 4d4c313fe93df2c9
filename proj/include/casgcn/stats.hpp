// Small statistics kit: regularized incomplete beta, Student-t CDF and the
// paired two-sided t-test used to annotate model comparisons.
#pragma once

#include <vector>

namespace casgcn::stats {

// I_x(a, b) via the standard continued-fraction expansion.
double regularized_incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double dof);

// Two-sided paired t-test on elementwise differences a - b. Degenerate
// zero-variance case: p = 1 when the mean difference is 0, else p = 0.
double paired_t_test_p(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace casgcn::stats
