#include "epiinfer/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace epi {

int ParamLayout::index(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (names[i] == name) return i;
  throw InvalidArgument("unknown parameter: " + name);
}

Model::Model(std::string name, ModelKind kind, int dim, ParamLayout layout)
    : name_(std::move(name)), kind_(kind), dim_(dim), layout_(std::move(layout)) {}

double Model::constant(const std::string& key) const {
  auto it = constants_.find(key);
  if (it == constants_.end()) throw InvalidArgument("model " + name_ + " has no constant " + key);
  return it->second;
}

Vec Model::rates(const Vec&, double, const Vec&) const { return Vec(); }

void Model::rate_jacobians(const Vec&, double, const Vec&, Mat& d_th, Mat& d_z) const {
  d_th.resize(0, n_params());
  d_z.resize(0, dim_);
}

Vec Model::rate_bound(const Vec& th, double t, const Vec& z) const { return rates(th, t, z); }

Vec Model::count_rates(const Vec& th, double t, const Vec& x, double N) const {
  return N * rates(th, t, x / N);
}

Vec Model::drift(const Vec& th, double t, const Vec& z) const {
  const Vec r = rates(th, t, z);
  Vec b = Vec::Zero(dim_);
  for (int j = 0; j < n_jumps(); ++j) b += r[j] * jumps_[j].cast<double>();
  return b;
}

Mat Model::diffusion(const Vec& th, double t, const Vec& z) const {
  const Vec r = rates(th, t, z);
  Mat S = Mat::Zero(dim_, dim_);
  for (int j = 0; j < n_jumps(); ++j) {
    const Vec v = jumps_[j].cast<double>();
    S += r[j] * v * v.transpose();
  }
  return S;
}

void Model::drift_jacobians(const Vec& th, double t, const Vec& z, Mat& d_th, Mat& d_z) const {
  Mat rth, rz;
  rate_jacobians(th, t, z, rth, rz);
  d_th = Mat::Zero(dim_, n_params());
  d_z = Mat::Zero(dim_, dim_);
  for (int j = 0; j < n_jumps(); ++j) {
    const Vec v = jumps_[j].cast<double>();
    d_th += v * rth.row(j);
    d_z += v * rz.row(j);
  }
}

std::vector<Mat> Model::diffusion_param_grad(const Vec& th, double t, const Vec& z) const {
  Mat rth, rz;
  rate_jacobians(th, t, z, rth, rz);
  std::vector<Mat> out(n_params(), Mat::Zero(dim_, dim_));
  for (int j = 0; j < n_jumps(); ++j) {
    const Vec v = jumps_[j].cast<double>();
    const Mat vv = v * v.transpose();
    for (int i = 0; i < n_params(); ++i) out[i] += rth(j, i) * vv;
  }
  return out;
}

bool Model::admissible(const Vec& z, double tol) const {
  if (z.size() != dim_) return false;
  if (!z.allFinite()) return false;
  if (!simplex_) return true;
  if ((z.array() < -tol).any() || (z.array() > 1.0 + tol).any()) return false;
  return z.sum() <= 1.0 + tol;
}

Vec Model::project(const Vec& z) const {
  if (!simplex_) return z;
  Vec y = z.cwiseMax(0.0).cwiseMin(1.0);
  const double s = y.sum();
  if (s > 1.0) y /= s;
  return y;
}

Vec Model::chain_step(const Vec&, const Vec&, Rng&) const {
  throw InvalidArgument("model " + name_ + " is not a discrete-time chain");
}

void Model::check_theta(const Vec& th) const {
  if (th.size() != n_params())
    throw InvalidArgument("model " + name_ + ": expected " + std::to_string(n_params()) +
                          " parameters, got " + std::to_string(th.size()));
  for (int i = 0; i < n_params(); ++i) {
    const double v = th[i];
    if (!std::isfinite(v)) throw InvalidArgument("parameter " + layout_.names[i] + " is not finite");
    switch (layout_.domains[i]) {
      case ParamDomain::Positive:
        if (v <= 0.0) throw InvalidArgument("parameter " + layout_.names[i] + " must be > 0");
        break;
      case ParamDomain::Unit:
        if (v <= 0.0 || v >= 1.0)
          throw InvalidArgument("parameter " + layout_.names[i] + " must lie in (0,1)");
        break;
      case ParamDomain::Real:
        break;
    }
  }
}

namespace {

IVec iv(std::initializer_list<int> xs) {
  IVec v(static_cast<int>(xs.size()));
  int k = 0;
  for (int x : xs) v[k++] = x;
  return v;
}

ParamLayout positive_layout(std::vector<std::string> names) {
  ParamLayout l;
  l.domains.assign(names.size(), ParamDomain::Positive);
  l.n_drift = static_cast<int>(names.size());
  l.names = std::move(names);
  return l;
}

double need(const Config& c, const std::string& key, const std::string& model) {
  auto it = c.find(key);
  if (it == c.end()) throw InvalidArgument("model " + model + " requires constant " + key);
  return it->second;
}

double get_or(const Config& c, const std::string& key, double dflt) {
  auto it = c.find(key);
  return it == c.end() ? dflt : it->second;
}

class Sir final : public Model {
 public:
  Sir() : Model("sir", ModelKind::Jump, 2, positive_layout({"lambda", "gamma"})) {
    jumps_ = {iv({-1, 1}), iv({0, -1})};
  }
  Vec rates(const Vec& th, double, const Vec& z) const override {
    Vec r(2);
    r << th[0] * z[0] * z[1], th[1] * z[1];
    return r;
  }
  void rate_jacobians(const Vec& th, double, const Vec& z, Mat& d_th, Mat& d_z) const override {
    d_th.setZero(2, 2);
    d_z.setZero(2, 2);
    d_th(0, 0) = z[0] * z[1];
    d_th(1, 1) = z[1];
    d_z(0, 0) = th[0] * z[1];
    d_z(0, 1) = th[0] * z[0];
    d_z(1, 1) = th[1];
  }
};

// Seasonal SIRS with demography; the (1,0) jump combines births and loss of
// immunity, rate mu + delta * r.
class SirsSeasonal final : public Model {
 public:
  explicit SirsSeasonal(const Config& c)
      : Model("sirs_seasonal", ModelKind::Jump, 2, [] {
          ParamLayout l;
          l.names = {"lambda0", "lambda1", "gamma", "delta"};
          l.domains = {ParamDomain::Positive, ParamDomain::Real, ParamDomain::Positive,
                       ParamDomain::Positive};
          l.n_drift = 4;
          return l;
        }()) {
    period_ = need(c, "T_per", name_);
    mu_ = need(c, "mu", name_);
    eta_ = need(c, "eta", name_);
    if (period_ <= 0.0) throw InvalidArgument("sirs_seasonal: T_per must be > 0");
    if (mu_ < 0.0 || eta_ < 0.0) throw InvalidArgument("sirs_seasonal: mu and eta must be >= 0");
    constants_ = {{"T_per", period_}, {"mu", mu_}, {"eta", eta_}};
    time_dependent_ = true;
    jumps_ = {iv({-1, 1}), iv({-1, 0}), iv({0, -1}), iv({1, 0})};
  }
  Vec rates(const Vec& th, double t, const Vec& z) const override {
    const double sn = std::sin(2.0 * std::numbers::pi * t / period_);
    const double lam = th[0] * (1.0 + th[1] * sn);
    Vec r(4);
    r << lam * z[0] * (z[1] + eta_), mu_ * z[0], (th[2] + mu_) * z[1],
        mu_ + th[3] * (1.0 - z[0] - z[1]);
    return r.cwiseMax(0.0);
  }
  void rate_jacobians(const Vec& th, double t, const Vec& z, Mat& d_th, Mat& d_z) const override {
    const double sn = std::sin(2.0 * std::numbers::pi * t / period_);
    const double lam = th[0] * (1.0 + th[1] * sn);
    const double si = z[0] * (z[1] + eta_);
    d_th.setZero(4, 4);
    d_z.setZero(4, 2);
    d_th(0, 0) = (1.0 + th[1] * sn) * si;
    d_th(0, 1) = th[0] * sn * si;
    d_z(0, 0) = lam * (z[1] + eta_);
    d_z(0, 1) = lam * z[0];
    d_z(1, 0) = mu_;
    d_th(2, 2) = z[1];
    d_z(2, 1) = th[2] + mu_;
    d_th(3, 3) = 1.0 - z[0] - z[1];
    d_z(3, 0) = -th[3];
    d_z(3, 1) = -th[3];
  }
  Vec rate_bound(const Vec& th, double t, const Vec& z) const override {
    Vec r = rates(th, t, z);
    r[0] = th[0] * (1.0 + std::abs(th[1])) * z[0] * (z[1] + eta_);
    return r;
  }

 private:
  double period_, mu_, eta_;
};

class SeirEbola final : public Model {
 public:
  SeirEbola() : Model("seir_ebola", ModelKind::Jump, 3, positive_layout({"lambda", "nu", "gamma"})) {
    jumps_ = {iv({-1, 1, 0}), iv({0, -1, 1}), iv({0, 0, -1})};
  }
  Vec rates(const Vec& th, double, const Vec& z) const override {
    Vec r(3);
    r << th[0] * z[0] * z[2], th[1] * z[1], th[2] * z[2];
    return r;
  }
  void rate_jacobians(const Vec& th, double, const Vec& z, Mat& d_th, Mat& d_z) const override {
    d_th.setZero(3, 3);
    d_z.setZero(3, 3);
    d_th(0, 0) = z[0] * z[2];
    d_z(0, 0) = th[0] * z[2];
    d_z(0, 2) = th[0] * z[0];
    d_th(1, 1) = z[1];
    d_z(1, 1) = th[1];
    d_th(2, 2) = z[2];
    d_z(2, 2) = th[2];
  }
};

class SeirsDemography final : public Model {
 public:
  SeirsDemography()
      : Model("seirs_demography", ModelKind::Jump, 3,
              positive_layout({"lambda", "nu", "gamma", "delta", "mu"})) {
    jumps_ = {iv({-1, 1, 0}), iv({0, -1, 1}), iv({1, 0, 0}),
              iv({0, 0, -1}), iv({-1, 0, 0}), iv({0, -1, 0})};
  }
  Vec rates(const Vec& th, double, const Vec& z) const override {
    const double lam = th[0], nu = th[1], gam = th[2], del = th[3], mu = th[4];
    Vec r(6);
    r << lam * z[0] * z[2], nu * z[1], mu + del * (1.0 - z[0] - z[1] - z[2]), (mu + gam) * z[2],
        mu * z[0], mu * z[1];
    return r.cwiseMax(0.0);
  }
  void rate_jacobians(const Vec& th, double, const Vec& z, Mat& d_th, Mat& d_z) const override {
    const double lam = th[0], nu = th[1], gam = th[2], del = th[3], mu = th[4];
    d_th.setZero(6, 5);
    d_z.setZero(6, 3);
    d_th(0, 0) = z[0] * z[2];
    d_z(0, 0) = lam * z[2];
    d_z(0, 2) = lam * z[0];
    d_th(1, 1) = z[1];
    d_z(1, 1) = nu;
    d_th(2, 3) = 1.0 - z[0] - z[1] - z[2];
    d_th(2, 4) = 1.0;
    d_z.row(2).setConstant(-del);
    d_th(3, 2) = z[2];
    d_th(3, 4) = z[2];
    d_z(3, 2) = mu + gam;
    d_th(4, 4) = z[0];
    d_z(4, 0) = mu;
    d_th(5, 4) = z[1];
    d_z(5, 1) = mu;
  }
};

// Linear two-dimensional OU with A = [[a, b], [0, a + h]] and noise
// sigma * diag(1, x2_scale).
class Ou2d final : public Model {
 public:
  explicit Ou2d(const Config& c)
      : Model("ou2d", ModelKind::Diffusion, 2, [] {
          ParamLayout l;
          l.names = {"a", "b", "h", "sigma"};
          l.domains = {ParamDomain::Real, ParamDomain::Real, ParamDomain::Real,
                       ParamDomain::Positive};
          l.n_drift = 3;
          l.beta_is_alpha = false;
          return l;
        }()) {
    scale_ = get_or(c, "x2_scale", 1.0);
    constants_ = {{"x2_scale", scale_}};
    simplex_ = false;
  }
  Vec drift(const Vec& th, double, const Vec& z) const override {
    Vec b(2);
    b << th[0] * z[0] + th[1] * z[1], (th[0] + th[2]) * z[1];
    return b;
  }
  Mat diffusion(const Vec& th, double, const Vec&) const override {
    Mat S = Mat::Zero(2, 2);
    S(0, 0) = th[3] * th[3];
    S(1, 1) = th[3] * th[3] * scale_ * scale_;
    return S;
  }
  void drift_jacobians(const Vec& th, double, const Vec& z, Mat& d_th, Mat& d_z) const override {
    d_th.setZero(2, 4);
    d_z.setZero(2, 2);
    d_th(0, 0) = z[0];
    d_th(0, 1) = z[1];
    d_th(1, 0) = z[1];
    d_th(1, 2) = z[1];
    d_z << th[0], th[1], 0.0, th[0] + th[2];
  }
  std::vector<Mat> diffusion_param_grad(const Vec& th, double, const Vec&) const override {
    std::vector<Mat> g(4, Mat::Zero(2, 2));
    g[3](0, 0) = 2.0 * th[3];
    g[3](1, 1) = 2.0 * th[3] * scale_ * scale_;
    return g;
  }

 private:
  double scale_;
};

// Scalar fixtures: ou1d has b = theta * z, Sigma = sigma^2; brownian_drift
// has b = alpha, Sigma = 1.
class Ou1d final : public Model {
 public:
  Ou1d()
      : Model("ou1d", ModelKind::Diffusion, 1, [] {
          ParamLayout l;
          l.names = {"theta", "sigma"};
          l.domains = {ParamDomain::Real, ParamDomain::Positive};
          l.n_drift = 1;
          l.beta_is_alpha = false;
          return l;
        }()) {
    simplex_ = false;
  }
  Vec drift(const Vec& th, double, const Vec& z) const override { return th[0] * z; }
  Mat diffusion(const Vec& th, double, const Vec&) const override {
    return Mat::Constant(1, 1, th[1] * th[1]);
  }
  void drift_jacobians(const Vec& th, double, const Vec& z, Mat& d_th, Mat& d_z) const override {
    d_th.setZero(1, 2);
    d_th(0, 0) = z[0];
    d_z = Mat::Constant(1, 1, th[0]);
  }
  std::vector<Mat> diffusion_param_grad(const Vec& th, double, const Vec&) const override {
    return {Mat::Zero(1, 1), Mat::Constant(1, 1, 2.0 * th[1])};
  }
};

class BrownianDrift final : public Model {
 public:
  BrownianDrift()
      : Model("brownian_drift", ModelKind::Diffusion, 1, [] {
          ParamLayout l;
          l.names = {"alpha"};
          l.domains = {ParamDomain::Real};
          l.n_drift = 1;
          l.beta_is_alpha = true;
          return l;
        }()) {
    simplex_ = false;
  }
  Vec drift(const Vec& th, double, const Vec&) const override { return Vec::Constant(1, th[0]); }
  Mat diffusion(const Vec&, double, const Vec&) const override { return Mat::Identity(1, 1); }
  void drift_jacobians(const Vec&, double, const Vec&, Mat& d_th, Mat& d_z) const override {
    d_th = Mat::Ones(1, 1);
    d_z = Mat::Zero(1, 1);
  }
  std::vector<Mat> diffusion_param_grad(const Vec&, double, const Vec&) const override {
    return {Mat::Zero(1, 1)};
  }
};

// Chain-binomial and chain models. State vectors hold counts.
class Greenwood final : public Model {
 public:
  Greenwood() : Model("greenwood", ModelKind::Chain, 2, [] {
                  ParamLayout l;
                  l.names = {"p"};
                  l.domains = {ParamDomain::Unit};
                  l.n_drift = 1;
                  return l;
                }()) {}
  Vec chain_step(const Vec& th, const Vec& x, Rng& rng) const override {
    Vec y = x;
    if (x[1] <= 0.0) {
      y[1] = 0.0;
      return y;
    }
    const long inf = rng.binomial(static_cast<long>(x[0]), th[0]);
    y[0] = x[0] - inf;
    y[1] = inf;
    return y;
  }
};

class ReedFrost final : public Model {
 public:
  ReedFrost() : Model("reed_frost", ModelKind::Chain, 2, [] {
                  ParamLayout l;
                  l.names = {"q"};
                  l.domains = {ParamDomain::Unit};
                  l.n_drift = 1;
                  return l;
                }()) {}
  Vec chain_step(const Vec& th, const Vec& x, Rng& rng) const override {
    Vec y = x;
    const double pinf = 1.0 - std::pow(th[0], x[1]);
    const long inf = rng.binomial(static_cast<long>(x[0]), pinf);
    y[0] = x[0] - inf;
    y[1] = inf;
    return y;
  }
};

class BdReemerge final : public Model {
 public:
  BdReemerge() : Model("bd_reemerge", ModelKind::Chain, 1, [] {
                   ParamLayout l;
                   l.names = {"p", "q"};
                   l.domains = {ParamDomain::Unit, ParamDomain::Unit};
                   l.n_drift = 2;
                   return l;
                 }()) {
    simplex_ = false;
  }
  Vec chain_step(const Vec& th, const Vec& x, Rng& rng) const override {
    const double u = rng.uniform();
    Vec y = x;
    if (x[0] <= 0.0) {
      if (u < th[0]) y[0] = 1.0;
    } else if (u < th[0]) {
      y[0] = x[0] + 1.0;
    } else if (u < th[0] + th[1]) {
      y[0] = x[0] - 1.0;
    }
    return y;
  }
};

class Ar1 final : public Model {
 public:
  Ar1() : Model("ar1", ModelKind::Chain, 1, [] {
            ParamLayout l;
            l.names = {"a", "gamma"};
            l.domains = {ParamDomain::Real, ParamDomain::Positive};
            l.n_drift = 1;
            l.beta_is_alpha = false;
            return l;
          }()) {
    simplex_ = false;
  }
  Vec chain_step(const Vec& th, const Vec& x, Rng& rng) const override {
    Vec y(1);
    y[0] = th[0] * x[0] + th[1] * rng.normal();
    return y;
  }
};

}  // namespace

ModelPtr build_model(const std::string& name, const Config& config) {
  if (name == "sir") return std::make_shared<Sir>();
  if (name == "sirs_seasonal") return std::make_shared<SirsSeasonal>(config);
  if (name == "seir_ebola") return std::make_shared<SeirEbola>();
  if (name == "seirs_demography") return std::make_shared<SeirsDemography>();
  if (name == "greenwood") return std::make_shared<Greenwood>();
  if (name == "reed_frost") return std::make_shared<ReedFrost>();
  if (name == "bd_reemerge") return std::make_shared<BdReemerge>();
  if (name == "ar1") return std::make_shared<Ar1>();
  if (name == "ou2d") return std::make_shared<Ou2d>(config);
  if (name == "ou1d") return std::make_shared<Ou1d>();
  if (name == "brownian_drift") return std::make_shared<BrownianDrift>();
  throw InvalidArgument("unknown model name: " + name);
}

Vec drift(const Model& m, const Vec& th, double t, const Vec& z) {
  if (!m.admissible(z)) throw InvalidArgument("drift: state outside admissible set");
  return m.drift(th, t, z);
}

Mat diffusion_matrix(const Model& m, const Vec& th, double t, const Vec& z) {
  if (!m.admissible(z)) throw InvalidArgument("diffusion_matrix: state outside admissible set");
  return m.diffusion(th, t, z);
}

DriftGradients drift_gradients(const Model& m, const Vec& th, double t, const Vec& z) {
  if (!m.admissible(z)) throw InvalidArgument("drift_gradients: state outside admissible set");
  Mat dth, dz;
  m.drift_jacobians(th, t, z, dth, dz);
  return {dth.leftCols(m.n_drift()), dz};
}

Mat diffusion_factor(const Mat& Sigma) {
  require(Sigma.rows() == Sigma.cols(), "diffusion_factor: matrix must be square");
  const int p = static_cast<int>(Sigma.rows());
  const double scale = 1.0 + Sigma.cwiseAbs().maxCoeff();
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidArgument("diffusion_factor: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(Sigma);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw InvalidArgument("diffusion_factor: matrix is indefinite");
  const Mat C = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                es.eigenvectors().transpose();
  // Cholesky that tolerates zero pivots (PSD input after clipping).
  Mat L = Mat::Zero(p, p);
  const double tiny = 1e-14 * scale;
  for (int k = 0; k < p; ++k) {
    double d = C(k, k);
    for (int j = 0; j < k; ++j) d -= L(k, j) * L(k, j);
    if (d <= tiny) continue;
    L(k, k) = std::sqrt(d);
    for (int i = k + 1; i < p; ++i) {
      double s = C(i, k);
      for (int j = 0; j < k; ++j) s -= L(i, j) * L(k, j);
      L(i, k) = s / L(k, k);
    }
  }
  return L;
}

Vec to_unconstrained(const Vec& th, const std::vector<ParamDomain>& dom) {
  Vec u(th.size());
  for (int i = 0; i < th.size(); ++i) {
    switch (dom[i]) {
      case ParamDomain::Positive: u[i] = std::log(th[i]); break;
      case ParamDomain::Unit: u[i] = std::log(th[i] / (1.0 - th[i])); break;
      case ParamDomain::Real: u[i] = th[i]; break;
    }
  }
  return u;
}

Vec from_unconstrained(const Vec& u, const std::vector<ParamDomain>& dom) {
  Vec th(u.size());
  for (int i = 0; i < u.size(); ++i) {
    switch (dom[i]) {
      case ParamDomain::Positive: th[i] = std::exp(u[i]); break;
      case ParamDomain::Unit: th[i] = 1.0 / (1.0 + std::exp(-u[i])); break;
      case ParamDomain::Real: th[i] = u[i]; break;
    }
  }
  return th;
}

Mat icu_transition(double a, double b, double d) {
  Mat Q(3, 3);
  const double e = a + (1.0 - a) * d;
  Q(0, 0) = e * e;
  Q(0, 1) = 2.0 * (1.0 - a) * (1.0 - d) * e;
  Q(0, 2) = (1.0 - a) * (1.0 - a) * (1.0 - d) * (1.0 - d);
  Q(1, 0) = a * b * d + (1.0 - a * b) * d * d;
  Q(1, 1) = 2.0 * (1.0 - a * b) * d * (1.0 - d) + a * b * (1.0 - d);
  Q(1, 2) = (1.0 - a * b) * (1.0 - d) * (1.0 - d);
  Q(2, 0) = d * d;
  Q(2, 1) = 2.0 * d * (1.0 - d);
  Q(2, 2) = (1.0 - d) * (1.0 - d);
  return Q;
}

}  // namespace epi
