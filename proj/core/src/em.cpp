#include "epiinfer/em.hpp"

#include "epiinfer/optim.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <map>
#include <sstream>

namespace epi {

namespace {

// Observed pair counts grouped by interval length.
std::map<double, Mat> pair_counts(const DiscreteChainObs& obs) {
  std::map<double, Mat> out;
  const int S = obs.n_states;
  for (int i = 1; i <= obs.n(); ++i) {
    auto it = out.find(obs.step(i - 1));
    if (it == out.end()) it = out.emplace(obs.step(i - 1), Mat::Zero(S, S)).first;
    it->second(obs.states[i - 1], obs.states[i]) += 1.0;
  }
  return out;
}

}  // namespace

double DiscreteChainObs::total_time() const {
  double t = 0.0;
  for (int i = 0; i < n(); ++i) t += step(i);
  return t;
}

void DiscreteChainObs::validate() const {
  require(n_states >= 1, "DiscreteChainObs: need at least one state");
  require(states.size() >= 2, "DiscreteChainObs: need n >= 1 transitions");
  require(dt.size() == 1 || static_cast<int>(dt.size()) == n(),
          "DiscreteChainObs: dt must have one entry or one per step");
  for (double d : dt) require(d > 0.0, "DiscreteChainObs: intervals must be positive");
  for (int s : states)
    require(s >= 0 && s < n_states, "DiscreteChainObs: state label out of range");
}

DiscreteChainObs sample_ctmc(const CtmcPath& path, double dt, int n) {
  require(dt > 0.0 && n >= 1, "sample_ctmc: need dt > 0 and n >= 1");
  require(n * dt <= path.T * (1.0 + 1e-12), "sample_ctmc: grid exceeds the simulated horizon");
  DiscreteChainObs o;
  o.n_states = path.n_states;
  o.dt = {dt};
  o.states.resize(n + 1);
  for (int i = 0; i <= n; ++i) o.states[i] = path.state_at(i * dt);
  return o;
}

void check_qmatrix(const Mat& Q, double tol) {
  require(Q.rows() == Q.cols() && Q.rows() >= 1, "Q-matrix must be square");
  for (int i = 0; i < Q.rows(); ++i) {
    double scale = 0.0;
    for (int j = 0; j < Q.cols(); ++j) {
      if (i != j) require(Q(i, j) >= 0.0, "Q-matrix off-diagonals must be nonnegative");
      scale = std::max(scale, std::abs(Q(i, j)));
    }
    require(std::abs(Q.row(i).sum()) <= tol * std::max(1.0, scale),
            "Q-matrix rows must sum to zero");
  }
}

Mat transition_matrix(const Mat& Q, double t) {
  require(t >= 0.0, "transition_matrix: t must be nonnegative");
  require(Q.rows() == Q.cols(), "transition_matrix: Q must be square");
  Mat P = (t * Q).exp();
  P = P.cwiseMax(0.0);
  for (int i = 0; i < P.rows(); ++i) P.row(i) /= P.row(i).sum();
  return P;
}

Mat van_loan_integrals(const Mat& Q, double t, int k, int l) {
  require(t >= 0.0, "van_loan_integrals: t must be nonnegative");
  const int S = static_cast<int>(Q.rows());
  require(k >= 0 && k < S && l >= 0 && l < S, "van_loan_integrals: index out of range");
  Mat A = Mat::Zero(2 * S, 2 * S);
  A.topLeftCorner(S, S) = Q;
  A.bottomRightCorner(S, S) = Q;
  A(k, S + l) = 1.0;
  const Mat E = (t * A).exp();
  return E.topRightCorner(S, S);
}

TransitionCounts e_step(const Mat& Q, const DiscreteChainObs& obs) {
  obs.validate();
  const int S = obs.n_states;
  require(Q.rows() == S, "e_step: Q has the wrong size");
  TransitionCounts out{Mat::Zero(S, S), Vec::Zero(S)};
  for (const auto& [dt, C] : pair_counts(obs)) {
    const Mat P = (dt * Q).exp();
    for (int a = 0; a < S; ++a)
      for (int b = 0; b < S; ++b)
        if (C(a, b) > 0.0 && !(P(a, b) > 0.0)) {
          std::ostringstream msg;
          msg << "e_step: observed transition " << a << "->" << b
              << " has zero probability under Q";
          throw InvalidArgument(msg.str());
        }
    const Mat W = C.cwiseQuotient(P.cwiseMax(1e-300));
    for (int k = 0; k < S; ++k) {
      for (int l = 0; l < S; ++l) {
        if (k != l && Q(k, l) <= 0.0) continue;
        const Mat M = van_loan_integrals(Q, dt, k, l);
        const double v = W.cwiseProduct(M).sum();
        if (k == l)
          out.R[k] += v;
        else
          out.N(k, l) += Q(k, l) * v;
      }
    }
  }
  return out;
}

Mat m_step(const TransitionCounts& st) {
  const int S = static_cast<int>(st.R.size());
  Mat Q = Mat::Zero(S, S);
  for (int k = 0; k < S; ++k) {
    if (!(st.R[k] > 0.0)) continue;
    for (int l = 0; l < S; ++l)
      if (l != k) Q(k, l) = st.N(k, l) / st.R[k];
    Q(k, k) = -Q.row(k).sum();
  }
  return Q;
}

double discrete_loglik(const Mat& Q, const DiscreteChainObs& obs) {
  obs.validate();
  double ll = 0.0;
  for (const auto& [dt, C] : pair_counts(obs)) {
    const Mat P = transition_matrix(Q, dt);
    for (int a = 0; a < C.rows(); ++a)
      for (int b = 0; b < C.cols(); ++b)
        if (C(a, b) > 0.0) ll += C(a, b) * std::log(P(a, b));
  }
  return ll;
}

EmResult em_fit(const DiscreteChainObs& obs, const Mat& Q0, const EmOptions& o) {
  obs.validate();
  check_qmatrix(Q0, 1e-10);
  const int S = obs.n_states;
  require(Q0.rows() == S, "em_fit: Q0 has the wrong size");
  for (int k = 0; k < S; ++k)
    for (int l = 0; l < S; ++l)
      require(k == l || Q0(k, l) > 0.0, "em_fit: Q0 needs strictly positive off-diagonals");

  EmResult r;
  r.Q = Q0;
  r.loglik.push_back(discrete_loglik(Q0, obs));
  for (int it = 0; it < o.max_iter; ++it) {
    const Mat Qn = m_step(e_step(r.Q, obs));
    const double ll = discrete_loglik(Qn, obs);
    const double prev = r.loglik.back();
    const double drop = prev - ll;
    if (drop > o.monotone_slack * std::max(1.0, std::abs(prev))) {
      std::ostringstream msg;
      msg << "em_fit: log-likelihood decreased by " << drop << " at iteration " << it + 1;
      throw NumericalError(msg.str());
    }
    r.max_violation = std::max(r.max_violation, drop);
    r.Q = Qn;
    r.loglik.push_back(ll);
    r.iterations = it + 1;
    if (std::abs(ll - prev) <= o.tol * std::max(1.0, std::abs(ll))) {
      r.converged = true;
      break;
    }
  }

  // Curvature of the discrete likelihood in the off-diagonal rates.
  for (int k = 0; k < S; ++k)
    for (int l = 0; l < S; ++l)
      if (k != l && r.Q(k, l) > 0.0) r.rate_index.emplace_back(k, l);
  const int nf = static_cast<int>(r.rate_index.size());
  if (nf > 0) {
    Vec q(nf);
    for (int i = 0; i < nf; ++i) q[i] = r.Q(r.rate_index[i].first, r.rate_index[i].second);
    const Objective ll = [&](const Vec& v) {
      Mat Qv = Mat::Zero(S, S);
      for (int i = 0; i < nf; ++i) Qv(r.rate_index[i].first, r.rate_index[i].second) = v[i];
      for (int k = 0; k < S; ++k) Qv(k, k) = -Qv.row(k).sum();
      if ((v.array() < 0.0).any()) return -std::numeric_limits<double>::infinity();
      return discrete_loglik(Qv, obs);
    };
    const double h = 1e-4 * std::max(q.minCoeff(), 1e-8);
    r.hessian = numeric_hessian(ll, q, h);
    Eigen::SelfAdjointEigenSolver<Mat> es(-0.5 * (r.hessian + r.hessian.transpose()));
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > o.identifiability_cond) {
      r.warnings.push_back(
          "discrete-likelihood Hessian is near-singular; rates are weakly identifiable");
    } else {
      r.cov = (-r.hessian).inverse();
    }
  }
  if (!r.converged) r.warnings.push_back("EM reached max_iter before the tolerance");
  return r;
}

}  // namespace epi
