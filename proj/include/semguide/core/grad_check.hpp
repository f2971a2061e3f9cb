// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "semguide/core/nn_ops.hpp"
#include "semguide/core/ops.hpp"
#include "semguide/core/tape.hpp"

namespace semguide {

struct GradCheckReport {
  std::vector<double> per_input_max_rel_err;
  bool pass = false;
  double eps = 0;
  double tol = 0;

  double max_rel_err() const {
    double m = 0;
    for (double e : per_input_max_rel_err) m = std::max(m, e);
    return m;
  }
};

/// Central-difference check of a scalar-valued tensor function, at 64-bit.
/// `fn` receives leaves already attached to a tape; the harness evaluates it
/// once for the analytic gradients and 2*numel times for the numeric ones.
/// Relative error uses max(|analytic|, |numeric|, 1e-8) in the denominator.
inline GradCheckReport grad_check(
    const std::function<Tensor64(const std::vector<Tensor64>&)>& fn,
    const std::vector<Tensor64>& inputs, double eps = 1e-5, double tol = 1e-4) {
  GradCheckReport report;
  report.eps = eps;
  report.tol = tol;

  // Analytic pass.
  Tape<double> tape;
  std::vector<Tensor64> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor64& x : inputs) leaves.push_back(tape.leaf(x.clone()));
  Tensor64 loss = fn(leaves);
  if (loss.size() != 1) throw ShapeError("grad_check: fn must return a scalar");
  if (!loss.all_finite()) throw NumericError("grad_check: non-finite loss");
  tape.backward(loss);
  std::vector<Tensor64> analytic;
  for (const Tensor64& l : leaves) analytic.push_back(tape.grad(l));

  auto eval = [&fn](const std::vector<Tensor64>& xs) {
    Tape<double> t;
    std::vector<Tensor64> ls;
    ls.reserve(xs.size());
    for (const Tensor64& x : xs) ls.push_back(t.leaf(x, /*requires_grad=*/false));
    const double v = fn(ls).item();
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite evaluation");
    return v;
  };

  std::vector<Tensor64> work;
  for (const Tensor64& x : inputs) work.push_back(x.clone());

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    double max_err = 0;
    for (std::int64_t k = 0; k < work[i].size(); ++k) {
      const double orig = work[i][k];
      work[i][k] = orig + eps;
      const double fp = eval(work);
      work[i][k] = orig - eps;
      const double fm = eval(work);
      work[i][k] = orig;
      const double numeric = (fp - fm) / (2 * eps);
      const double a = analytic[i][k];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      max_err = std::max(max_err, std::fabs(a - numeric) / denom);
    }
    report.per_input_max_rel_err.push_back(max_err);
  }
  report.pass = report.max_rel_err() < tol;
  return report;
}

}  // namespace semguide
