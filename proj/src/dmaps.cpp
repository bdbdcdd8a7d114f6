#include "plom/dmaps.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "plom/density.hpp"
#include "plom/error.hpp"

namespace plom {

namespace {

struct Symmetrized {
  Eigen::MatrixXd s;
  Eigen::VectorXd b;
};

Symmetrized symmetrize(const Eigen::MatrixXd& sqdist, double eps_dm) {
  if (!(eps_dm > 0.0) || !std::isfinite(eps_dm))
    throw Error(Errc::ConfigInvalid, "eps_dm must be positive and finite");
  Symmetrized out;
  out.s = (sqdist * (-0.25 / eps_dm)).array().exp().matrix();
  out.b = out.s.rowwise().sum();
  if (!out.s.allFinite() || !(out.b.minCoeff() > 0.0))
    throw Error(Errc::NonFiniteKernel, "kernel row sums vanish at eps_dm = " + std::to_string(eps_dm));
  const Eigen::VectorXd r = out.b.cwiseSqrt().cwiseInverse();
  out.s = r.asDiagonal() * out.s * r.asDiagonal();
  return out;
}

double median_offdiag(const Eigen::MatrixXd& d) {
  std::vector<double> v;
  const Eigen::Index N = d.rows();
  v.reserve(static_cast<std::size_t>(N * (N - 1) / 2));
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index i = j + 1; i < N; ++i) v.push_back(d(i, j));
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

JumpSample evaluate(const Eigen::MatrixXd& sqdist, double eps, Eigen::Index m_o, const SelectOptions& o) {
  const Eigen::VectorXd lam = transition_eigenvalues(sqdist, eps);
  JumpSample js;
  js.eps = eps;
  js.lambda2 = lam(1);
  js.jump = lam(m_o) / lam(1);
  js.plateau = lam(1) / lam(m_o - 1);
  // The drop may sit one index early when a heavy-tailed direction's mode merges
  // with the outlier-driven lambda_2.
  js.gap = std::max(lam(m_o - 1) / lam(m_o), lam(m_o - 2) / lam(m_o - 1));
  js.accepted = js.jump <= o.jump_threshold && js.lambda2 < 1.0 - o.lambda2_margin && lam(m_o) > 0.0 &&
                js.gap >= o.gap_min;
  return js;
}

}  // namespace

Eigen::VectorXd transition_eigenvalues(const Eigen::MatrixXd& sqdist, double eps_dm) {
  Symmetrized sym = symmetrize(sqdist, eps_dm);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym.s, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(Errc::EigSolverFailure, "transition eigensolver failed");
  return es.eigenvalues().reverse();
}

DiffusionBasis transition_eigs(const Eigen::MatrixXd& eta, double eps_dm, Eigen::Index m) {
  const Eigen::Index N = eta.cols();
  if (m < 1 || m > N) throw Error(Errc::ConfigInvalid, "basis size out of range");
  Symmetrized sym = symmetrize(squared_distances(eta, eta), eps_dm);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym.s);
  if (es.info() != Eigen::Success) throw Error(Errc::EigSolverFailure, "transition eigensolver failed");

  DiffusionBasis basis;
  basis.eps_dm = eps_dm;
  basis.m = m;
  basis.b_diag = sym.b;
  basis.eigvals = es.eigenvalues().reverse();
  // psi = b^{-1/2} phi gives <b psi_a, psi_b> = delta_ab.
  basis.g = sym.b.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().rightCols(m).rowwise().reverse();
  for (Eigen::Index a = 0; a < m; ++a) {
    Eigen::Index k;
    basis.g.col(a).cwiseAbs().maxCoeff(&k);
    if (basis.g(k, a) < 0.0) basis.g.col(a) = -basis.g.col(a);
  }
  return basis;
}

DiffusionBasis identity_basis(Eigen::Index N) {
  DiffusionBasis basis;
  basis.m = N;
  basis.g = Eigen::MatrixXd::Identity(N, N);
  basis.identity = true;
  return basis;
}

double jump(const Eigen::VectorXd& eigvals, Eigen::Index m_o) {
  if (m_o < 2 || m_o >= eigvals.size()) throw Error(Errc::ConfigInvalid, "m_o out of range for jump");
  return eigvals(m_o) / eigvals(1);
}

double jump(const Eigen::MatrixXd& eta, double eps_dm, Eigen::Index m_o) {
  return jump(transition_eigenvalues(squared_distances(eta, eta), eps_dm), m_o);
}

std::vector<JumpSample> jump_curve(const Eigen::MatrixXd& eta, const std::vector<double>& eps,
                                   Eigen::Index m_o, const SelectOptions& opts) {
  if (m_o < 2 || m_o >= eta.cols()) throw Error(Errc::ConfigInvalid, "m_o out of range for jump");
  const Eigen::MatrixXd d = squared_distances(eta, eta);
  std::vector<JumpSample> out;
  for (double e : eps) out.push_back(evaluate(d, e, m_o, opts));
  return out;
}

BasisSelection select_basis(const Eigen::MatrixXd& eta, const SelectOptions& opts) {
  const Eigen::Index nu = eta.rows(), N = eta.cols();
  BasisSelection sel;
  if (nu == 1) {
    sel.basis = identity_basis(N);
    sel.m_o = N;
    return sel;
  }
  const Eigen::Index m_o = opts.m_o > 0 ? opts.m_o : nu + 1;
  if (m_o + 1 > N)
    throw Error(Errc::NoValidEpsilon, "m_o = " + std::to_string(m_o) + " needs more than " +
                                          std::to_string(N) + " realizations");
  sel.m_o = m_o;

  const Eigen::MatrixXd d = squared_distances(eta, eta);
  sel.median_sqdist = median_offdiag(d);
  if (!(sel.median_sqdist > 0.0)) throw Error(Errc::NoValidEpsilon, "training columns coincide");

  const double lo = opts.grid_lo * sel.median_sqdist;
  const int kmax = static_cast<int>(std::ceil(std::log(opts.grid_hi / opts.grid_lo) / std::log(opts.grid_ratio)));
  std::map<int, JumpSample> seen;
  auto at = [&](int k) -> const JumpSample& {
    auto it = seen.find(k);
    if (it == seen.end()) it = seen.emplace(k, evaluate(d, lo * std::pow(opts.grid_ratio, k), m_o, opts)).first;
    return it->second;
  };
  auto valid = [&](int k) { return at(k).accepted; };

  const int stride = std::max(1, opts.coarse_stride);
  int hit = -1;
  for (int k = 0; k <= kmax; k += stride) {
    if (valid(k)) {
      hit = k;
      break;
    }
  }
  if (hit < 0) {
    std::string msg = "no eps on the search grid satisfies the jump and gap criteria (largest gap ";
    double best = 0.0;
    for (auto& [k, js] : seen) best = std::max(best, js.gap);
    throw Error(Errc::NoValidEpsilon, msg + std::to_string(best) + ")");
  }
  int fine = hit;
  for (int k = std::max(1, hit - stride + 1); k < hit; ++k) {
    if (valid(k)) {
      fine = k;
      break;
    }
  }

  double eps_hi = lo * std::pow(opts.grid_ratio, fine);
  if (fine > 0) {
    double eps_lo = lo * std::pow(opts.grid_ratio, fine - 1);
    while ((eps_hi - eps_lo) > opts.rel_tol * eps_hi) {
      const double mid = 0.5 * (eps_lo + eps_hi);
      JumpSample js = evaluate(d, mid, m_o, opts);
      sel.curve.push_back(js);
      if (js.accepted) eps_hi = mid;
      else eps_lo = mid;
    }
  }
  for (auto& [k, js] : seen) sel.curve.push_back(js);
  std::sort(sel.curve.begin(), sel.curve.end(), [](auto& a, auto& b) { return a.eps < b.eps; });
  for (std::size_t i = 1; i < sel.curve.size(); ++i)
    if (sel.curve[i].lambda2 > sel.curve[i - 1].lambda2 * (1.0 + 1e-9)) sel.lambda2_monotone = false;

  sel.basis = transition_eigs(eta, eps_hi, m_o);
  return sel;
}

}  // namespace plom
