#pragma once

#include "epiinfer/types.hpp"

#include <functional>
#include <string>

namespace epi {

using Objective = std::function<double(const Vec&)>;
using Gradient = std::function<Vec(const Vec&)>;

struct OptimResult {
  Vec x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

struct NelderMeadOptions {
  double step = 0.1;
  int max_iter = 4000;
  double ftol = 1e-12;
  double xtol = 1e-9;
};

struct BfgsOptions {
  int max_iter = 300;
  double gtol = 1e-7;
  double fd_step = 1e-6;
};

OptimResult nelder_mead(const Objective& f, const Vec& x0, const NelderMeadOptions& o = {});
// Uses central-difference gradients when grad is empty.
OptimResult bfgs(const Objective& f, const Vec& x0, const BfgsOptions& o = {},
                 const Gradient& grad = {});
// Nelder-Mead warm start followed by BFGS polishing.
OptimResult minimize(const Objective& f, const Vec& x0, const NelderMeadOptions& nm = {},
                     const BfgsOptions& bf = {});

Vec numeric_gradient(const Objective& f, const Vec& x, double h = 1e-6);
Mat numeric_hessian(const Objective& f, const Vec& x, double h = 1e-4);

// Root of a scalar function on a bracket [lo, hi] by safeguarded Newton
// steps (derivative by finite differences) falling back to bisection.
// Throws NumericalError if f(lo) and f(hi) have the same sign.
double find_root(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12,
                 int max_iter = 200);

}  // namespace epi
