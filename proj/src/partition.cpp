#include "plom/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "plom/density.hpp"
#include "plom/error.hpp"
#include "plom/rng.hpp"

namespace plom {

namespace {

struct PairKernel {
  double shrink = 0.0;
  double scale = 0.0;  // 1 / (2 s_hat^2)
};

PairKernel pair_kernel(Eigen::Index N) {
  const Bandwidths bw = bandwidths(2, N);
  return {bw.s_hat / bw.s, 0.5 / (bw.s_hat * bw.s_hat)};
}

// log sum_l exp(-scale (x_i - shrink x_l)^2) for every i.
Eigen::VectorXd lse_marginal(const Eigen::VectorXd& x, const PairKernel& k) {
  const Eigen::Index N = x.size();
  const Eigen::ArrayXd cx = k.shrink * x.array();
  Eigen::VectorXd out(N);
  Eigen::ArrayXd t(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    t = (x(i) - cx).square();
    const double tmin = t.minCoeff();
    out(i) = -k.scale * tmin + std::log((-k.scale * (t - tmin)).exp().sum());
  }
  return out;
}

double mean_lse_joint(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const PairKernel& k) {
  const Eigen::Index N = x.size();
  const Eigen::ArrayXd cx = k.shrink * x.array(), cy = k.shrink * y.array();
  Eigen::ArrayXd t(N);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    t = (x(i) - cx).square() + (y(i) - cy).square();
    const double tmin = t.minCoeff();
    acc += -k.scale * tmin + std::log((-k.scale * (t - tmin)).exp().sum());
  }
  return acc / double(N);
}

}  // namespace

double pair_mi(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(Errc::DimensionMismatch, "pair_mi needs equal lengths >= 2");
  const PairKernel k = pair_kernel(x.size());
  const double v = mean_lse_joint(x, y, k) - lse_marginal(x, k).mean() - lse_marginal(y, k).mean() +
                   std::log(double(x.size()));
  return std::max(v, 0.0);
}

MutualInfoMatrix pairwise_mi(const Eigen::MatrixXd& eta) {
  const Eigen::Index nu = eta.rows(), N = eta.cols();
  if (nu < 2) throw Error(Errc::DimensionMismatch, "pairwise_mi needs at least two components");
  if (N < 2) throw Error(Errc::TooFewSamples, "pairwise_mi needs at least two realizations");
  const PairKernel k = pair_kernel(N);
  std::vector<Eigen::VectorXd> rows(static_cast<std::size_t>(nu));
  Eigen::VectorXd marg(nu);
  for (Eigen::Index j = 0; j < nu; ++j) {
    rows[j] = eta.row(j).transpose();
    marg(j) = lse_marginal(rows[j], k).mean();
  }
  MutualInfoMatrix out;
  const Bandwidths bw = bandwidths(2, N);
  out.s = bw.s;
  out.s_hat = bw.s_hat;
  out.mi = Eigen::MatrixXd::Zero(nu, nu);
  const double logn = std::log(double(N));
  for (Eigen::Index j = 0; j < nu; ++j) {
    for (Eigen::Index l = j + 1; l < nu; ++l) {
      const double v = std::max(0.0, mean_lse_joint(rows[j], rows[l], k) - marg(j) - marg(l) + logn);
      out.mi(j, l) = out.mi(l, j) = v;
    }
  }
  return out;
}

std::vector<double> null_mi_samples(const Eigen::MatrixXd& eta, int count, std::uint64_t seed) {
  const Eigen::Index nu = eta.rows(), N = eta.cols();
  std::vector<double> out;
  if (nu < 1 || count <= 0) return out;
  Rng rng = substream(seed, "mi-null");
  std::uniform_int_distribution<Eigen::Index> pick(0, nu - 1);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(N));
  for (int s = 0; s < count; ++s) {
    const Eigen::Index j = pick(rng);
    Eigen::Index l = pick(rng);
    if (nu > 1)
      while (l == j) l = pick(rng);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::VectorXd y(N);
    for (Eigen::Index i = 0; i < N; ++i) y(i) = eta(l, perm[i]);
    out.push_back(pair_mi(eta.row(j).transpose(), y));
  }
  return out;
}

std::vector<Group> threshold_groups(const Eigen::MatrixXd& mi, double level) {
  const Eigen::Index nu = mi.rows();
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(nu));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (Eigen::Index j = 0; j < nu; ++j)
    for (Eigen::Index l = j + 1; l < nu; ++l)
      if (mi(j, l) > level) {
        const Eigen::Index a = find(j), b = find(l);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<Group> groups;
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(nu), -1);
  for (Eigen::Index j = 0; j < nu; ++j) {
    const Eigen::Index r = find(j);
    if (slot[r] < 0) {
      slot[r] = static_cast<Eigen::Index>(groups.size());
      groups.emplace_back();
    }
    groups[slot[r]].push_back(j);
  }
  return groups;
}

double tau_of(const Eigen::MatrixXd& mi, const std::vector<Group>& groups, TauForm form) {
  const Eigen::Index nu = mi.rows();
  std::vector<Eigen::Index> label(static_cast<std::size_t>(nu));
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (Eigen::Index j : groups[g]) label[j] = static_cast<Eigen::Index>(g);
  double worst = 0.0, cut_all = 0.0, total_all = 0.0;
  for (Eigen::Index j = 0; j < nu; ++j) {
    double cut = 0.0, total = 0.0;
    for (Eigen::Index l = 0; l < nu; ++l) {
      if (l == j) continue;
      total += mi(j, l);
      if (label[l] != label[j]) cut += mi(j, l);
    }
    cut_all += cut;
    total_all += total;
    if (total > 0.0) worst = std::max(worst, cut / total);
  }
  if (form == TauForm::Global) return total_all > 0.0 ? cut_all / total_all : 0.0;
  return worst;
}

std::vector<double> default_levels(const Eigen::MatrixXd& mi, int count) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (Eigen::Index j = 0; j < mi.rows(); ++j)
    for (Eigen::Index l = j + 1; l < mi.cols(); ++l)
      if (mi(j, l) > 0.0) {
        lo = std::min(lo, mi(j, l));
        hi = std::max(hi, mi(j, l));
      }
  std::vector<double> levels;
  if (!(hi > 0.0)) return levels;
  lo = std::max(1e-4, lo);
  if (lo >= hi || count < 2) return {hi};
  for (int i = 0; i < count; ++i) levels.push_back(lo * std::pow(hi / lo, double(i) / double(count - 1)));
  return levels;
}

TauCurve tau_curve(const Eigen::MatrixXd& mi, const std::vector<double>& levels, TauForm form) {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (!(levels[i] > 0.0) || (i > 0 && !(levels[i] > levels[i - 1])))
      throw Error(Errc::ConfigInvalid, "levels must be positive and strictly increasing");
  TauCurve curve;
  curve.degenerate = !(mi.cwiseAbs().sum() > 0.0);
  for (double lvl : levels) {
    const auto groups = threshold_groups(mi, lvl);
    curve.points.push_back({lvl, curve.degenerate ? 0.0 : tau_of(mi, groups, form),
                            static_cast<Eigen::Index>(groups.size())});
  }
  return curve;
}

Eigen::Index Partition::dim() const {
  Eigen::Index n = 0;
  for (const auto& g : groups) n += static_cast<Eigen::Index>(g.size());
  return n;
}

std::vector<Eigen::Index> Partition::sizes() const {
  std::vector<Eigen::Index> s;
  for (const auto& g : groups) s.push_back(static_cast<Eigen::Index>(g.size()));
  return s;
}

Partition single_group(Eigen::Index nu) {
  Partition p;
  p.groups.emplace_back(static_cast<std::size_t>(nu));
  std::iota(p.groups[0].begin(), p.groups[0].end(), Eigen::Index{0});
  return p;
}

void validate(const Partition& p, Eigen::Index nu) {
  std::vector<int> seen(static_cast<std::size_t>(nu), 0);
  for (const auto& g : p.groups) {
    if (g.empty()) throw Error(Errc::PartitionMismatch, "empty group");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] < 0 || g[i] >= nu) throw Error(Errc::PartitionMismatch, "component index out of range");
      if (i > 0 && g[i] <= g[i - 1]) throw Error(Errc::PartitionMismatch, "group indices must be increasing");
      ++seen[g[i]];
    }
  }
  for (int c : seen)
    if (c != 1) throw Error(Errc::PartitionMismatch, "groups must cover every component exactly once");
}

Partition select_partition(const MutualInfoMatrix& mi, double mi_floor, const PartitionOptions& opts) {
  const Eigen::Index nu = mi.mi.rows();
  Eigen::MatrixXd m = (mi.mi.array() > mi_floor).select(mi.mi, 0.0);
  m.diagonal().setZero();

  Partition p;
  p.mi_floor = mi_floor;
  const auto levels = default_levels(m, opts.levels);
  if (levels.empty()) {
    p.groups = threshold_groups(m, 0.0);
    return p;
  }
  const TauCurve curve = tau_curve(m, levels, opts.tau_form);
  p.tau_curve = curve.points;
  double chosen = 0.0;
  for (const auto& pt : curve.points)
    if (pt.tau <= opts.tau_tol) chosen = pt.level;
  p.groups = threshold_groups(m, chosen);
  p.i_ref_opt = chosen;
  p.i_ref_low = chosen;
  for (const auto& pt : curve.points) {
    if (pt.level > chosen) break;
    if (threshold_groups(m, pt.level) == p.groups) {
      p.i_ref_low = pt.level;
      break;
    }
  }
  validate(p, nu);
  return p;
}

double mi_null_floor(const Eigen::MatrixXd& eta, const PartitionOptions& opts) {
  const auto null = null_mi_samples(eta, opts.null_samples, opts.seed);
  if (null.size() < 2) return 0.0;
  const double n = double(null.size());
  const double mean = std::accumulate(null.begin(), null.end(), 0.0) / n;
  double var = 0.0;
  for (double v : null) var += (v - mean) * (v - mean);
  return mean + opts.null_sigmas * std::sqrt(var / (n - 1.0));
}

Partition select_partition(const Eigen::MatrixXd& eta, const PartitionOptions& opts) {
  if (eta.rows() == 1) return single_group(1);
  return select_partition(pairwise_mi(eta), mi_null_floor(eta, opts), opts);
}

std::vector<Eigen::MatrixXd> split(const Eigen::MatrixXd& m, const Partition& p) {
  validate(p, m.rows());
  std::vector<Eigen::MatrixXd> out;
  for (const auto& g : p.groups) {
    Eigen::MatrixXd part(static_cast<Eigen::Index>(g.size()), m.cols());
    for (std::size_t k = 0; k < g.size(); ++k) part.row(static_cast<Eigen::Index>(k)) = m.row(g[k]);
    out.push_back(std::move(part));
  }
  return out;
}

Eigen::MatrixXd assemble(const std::vector<Eigen::MatrixXd>& parts, const Partition& p) {
  if (parts.size() != p.groups.size()) throw Error(Errc::DimensionMismatch, "group count mismatch");
  const Eigen::Index nu = p.dim();
  validate(p, nu);
  const Eigen::Index cols = parts.empty() ? 0 : parts[0].cols();
  Eigen::MatrixXd out(nu, cols);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].rows() != static_cast<Eigen::Index>(p.groups[i].size()) || parts[i].cols() != cols)
      throw Error(Errc::DimensionMismatch, "group block has the wrong shape");
    for (std::size_t k = 0; k < p.groups[i].size(); ++k) out.row(p.groups[i][k]) = parts[i].row(static_cast<Eigen::Index>(k));
  }
  return out;
}

}  // namespace plom
