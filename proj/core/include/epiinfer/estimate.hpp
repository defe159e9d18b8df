#pragma once

#include "epiinfer/types.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace epi {

// Point estimate with an asymptotic covariance. rate_tag records the scaling
// already folded into cov ("1/N", "1/n", "eps^2", ...). Boundary or
// undefined coordinates are reported through flags instead of exceptions.
struct EstimateResult {
  std::vector<std::string> names;
  Vec theta;
  Mat cov;
  std::string rate_tag;
  bool converged = true;
  std::map<std::string, double> diagnostics;
  std::map<std::string, Mat> matrices;
  std::vector<std::string> flags;

  bool has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
  }
  Vec sd() const { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

}  // namespace epi
