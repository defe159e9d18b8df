#pragma once

#include "epiinfer/rng.hpp"
#include "epiinfer/types.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace epi {

enum class ModelKind { Jump, Diffusion, Chain };
enum class ParamDomain { Positive, Unit, Real };

struct ParamLayout {
  std::vector<std::string> names;
  std::vector<ParamDomain> domains;
  int n_drift = 0;             // alpha = first n_drift entries
  bool beta_is_alpha = true;   // diffusion depends on alpha only

  int size() const { return static_cast<int>(names.size()); }
  int index(const std::string& name) const;
};

using Config = std::map<std::string, double>;

// A density-dependent epidemic model. Rates are per-jump intensities in the
// normalized state z = x/N; the count-scale rate of jump j is N * rate_j.
// Diffusion-kind and chain-kind models override the relevant hooks.
class Model {
 public:
  Model(std::string name, ModelKind kind, int dim, ParamLayout layout);
  virtual ~Model() = default;

  const std::string& name() const { return name_; }
  ModelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const ParamLayout& layout() const { return layout_; }
  int n_params() const { return layout_.size(); }
  int n_drift() const { return layout_.n_drift; }
  bool time_dependent() const { return time_dependent_; }
  const Config& constants() const { return constants_; }
  double constant(const std::string& key) const;

  // Jump structure (empty for diffusion and chain models).
  const std::vector<IVec>& jumps() const { return jumps_; }
  int n_jumps() const { return static_cast<int>(jumps_.size()); }
  virtual Vec rates(const Vec& th, double t, const Vec& z) const;
  virtual void rate_jacobians(const Vec& th, double t, const Vec& z, Mat& d_th, Mat& d_z) const;
  // Upper bound of every rate on [t, inf) at frozen state z; used for thinning.
  virtual Vec rate_bound(const Vec& th, double t, const Vec& z) const;
  Vec count_rates(const Vec& th, double t, const Vec& x, double N) const;

  // Diffusion limit. Defaults are assembled from the jump list.
  virtual Vec drift(const Vec& th, double t, const Vec& z) const;
  virtual Mat diffusion(const Vec& th, double t, const Vec& z) const;
  // d_th is dim x n_params (all parameters), d_z is dim x dim.
  virtual void drift_jacobians(const Vec& th, double t, const Vec& z, Mat& d_th, Mat& d_z) const;
  // dSigma/dtheta_i for every parameter i.
  virtual std::vector<Mat> diffusion_param_grad(const Vec& th, double t, const Vec& z) const;

  virtual bool admissible(const Vec& z, double tol = 1e-9) const;
  virtual Vec project(const Vec& z) const;

  // One step of a discrete-time chain model.
  virtual Vec chain_step(const Vec& th, const Vec& x, Rng& rng) const;

  // Throws if theta has the wrong size or violates its domain.
  void check_theta(const Vec& th) const;

 protected:
  std::string name_;
  ModelKind kind_;
  int dim_;
  ParamLayout layout_;
  bool time_dependent_ = false;
  bool simplex_ = true;
  std::vector<IVec> jumps_;
  Config constants_;
};

using ModelPtr = std::shared_ptr<const Model>;

// Names: sir, sirs_seasonal, seir_ebola, seirs_demography, greenwood,
// reed_frost, bd_reemerge, ar1, ou2d, plus the scalar fixtures ou1d and
// brownian_drift.
ModelPtr build_model(const std::string& name, const Config& config = {});

// Convenience wrappers matching the model operations.
Vec drift(const Model& m, const Vec& th, double t, const Vec& z);
Mat diffusion_matrix(const Model& m, const Vec& th, double t, const Vec& z);
struct DriftGradients {
  Mat d_alpha;  // dim x n_drift
  Mat d_z;      // dim x dim
};
DriftGradients drift_gradients(const Model& m, const Vec& th, double t, const Vec& z);

// Lower-triangular sigma with sigma*sigma^T = Sigma. Negative eigenvalues
// within tolerance are clipped to zero before factorizing.
Mat diffusion_factor(const Mat& Sigma);

// Parameter transforms used by the optimizers (log for positive, logit for
// unit-interval parameters).
Vec to_unconstrained(const Vec& th, const std::vector<ParamDomain>& dom);
Vec from_unconstrained(const Vec& u, const std::vector<ParamDomain>& dom);

// Two-bed intensive-care chain: transition matrix Q_theta(a, b, d).
Mat icu_transition(double a, double b, double d);

}  // namespace epi
