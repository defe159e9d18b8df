#pragma once

#include "epiinfer/rng.hpp"
#include "epiinfer/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace epi {

struct InputDist {
  std::string name;
  std::function<double(double)> quantile;
  std::function<double(double)> cdf;
};
InputDist uniform_input(const std::string& name, double lo, double hi);

// Y = f(X, noise); the Rng is seeded per call so runs are reproducible.
using Response = std::function<double(const Vec& x, Rng& noise)>;

struct SobolDesign {
  std::vector<InputDist> inputs;
  long n = 10000;
  Response f;
  SeedSpec seed{};
  bool totals = false;   // also evaluate f(A): n(p+2) calls instead of n(p+1)
  int bootstrap = 100;   // 0 disables bootstrap SDs
  long n_regression = 0; // separate i.i.d. sample for NW / wavelet; 0 reuses (B, f(B))
};

struct SobolResult {
  std::string method;
  Vec first, total;      // total is empty unless requested (Jansen only)
  Vec sd_first, sd_total;
  std::vector<std::string> flags;
  long calls = 0;
};

// Raw pick-freeze evaluations. Row i of A and B are independent input draws;
// fAB[l][i] = f(A with column l taken from B).
struct PickFreeze {
  Mat A, B;
  Vec fA, fB;
  std::vector<Vec> fAB;
  long calls = 0;
};
PickFreeze pick_freeze(const SobolDesign& d);

SobolResult jansen_estimate(const SobolDesign& d);
SobolResult jansen_from(const PickFreeze& pf, int bootstrap = 100, std::uint64_t seed = 1);

// Interaction index S_{l l'} from A with columns l and l' taken from B.
double second_order_index(const SobolDesign& d, int l, int lp);

// Nadaraya-Watson plug-in with the Epanechnikov kernel; h <= 0 selects
// SD(x) * n^{-1/3}.
double sobol_nw(const std::vector<double>& x, const std::vector<double>& y, double h = 0.0);

// Haar functions on [0,1): psi_jk(u) = 2^{j/2} psi(2^j u - k).
double haar_psi(int j, int k, double u);

struct WaveletIndex {
  double S = 0.0;
  bool degenerate = false;   // constant response
  std::vector<double> block_energy;  // sum_k beta_jk^2 per level (standardized Y)
  std::vector<bool> kept;
};
// Block-thresholded warped-wavelet estimator on the rank-transformed input.
WaveletIndex sobol_wavelet(const std::vector<double>& x, const std::vector<double>& y,
                           double K = 1.0);
// Picks K at the widest plateau of S(K) over the grid.
double wavelet_slope_heuristic(const std::vector<double>& x, const std::vector<double>& y,
                               const std::vector<double>& grid);

// All three estimators. NW and wavelet use the (B_l, f(B)) pairs, or a
// fresh sample of size n_regression when set.
struct SobolComparison {
  SobolResult jansen, nw, wavelet;
};
SobolComparison sobol_all(const SobolDesign& d, double K = 1.0);

}  // namespace epi
