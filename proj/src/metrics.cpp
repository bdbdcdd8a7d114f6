#include "plom/metrics.hpp"

#include <cmath>
#include <numeric>

#include "plom/error.hpp"

namespace plom {

namespace {

// Sum of squared distances to eta_d over the sample matrices, and ||eta_d||^2.
std::pair<double, double> distance_sums(const std::vector<Eigen::MatrixXd>& samples, const Eigen::MatrixXd& eta_d) {
  if (samples.empty()) throw Error(Errc::EmptySampleList, "no sample matrices");
  double acc = 0.0;
  for (const auto& m : samples) {
    if (m.rows() != eta_d.rows() || m.cols() != eta_d.cols())
      throw Error(Errc::DimensionMismatch, "sample matrix shape differs from the training matrix");
    acc += (m - eta_d).squaredNorm();
  }
  return {acc / double(samples.size()), eta_d.squaredNorm()};
}

}  // namespace

double d2_no_group(const std::vector<Eigen::MatrixXd>& samples, const Eigen::MatrixXd& eta_d) {
  const auto [num, den] = distance_sums(samples, eta_d);
  if (!(den > 0.0)) throw Error(Errc::DimensionMismatch, "training matrix is zero");
  return num / den;
}

double d2_weighted(const std::vector<double>& d2, const std::vector<Eigen::Index>& dims) {
  if (d2.size() != dims.size() || d2.empty()) throw Error(Errc::PartitionMismatch, "group count mismatch");
  const double nu = double(std::accumulate(dims.begin(), dims.end(), Eigen::Index{0}));
  double acc = 0.0;
  for (std::size_t i = 0; i < d2.size(); ++i) acc += double(dims[i]) / nu * d2[i];
  return acc;
}

GroupDistance d2_with_group(const std::vector<GroupSamples>& groups, Eigen::Index nu_total) {
  if (groups.empty()) throw Error(Errc::EmptySampleList, "no groups");
  GroupDistance out;
  double num = 0.0, den = 0.0;
  std::size_t n_mc = 0;
  for (const auto& g : groups) {
    if (!g.samples || !g.eta_d) throw Error(Errc::EmptySampleList, "missing group data");
    if (n_mc == 0) n_mc = g.samples->size();
    if (g.samples->size() != n_mc) throw Error(Errc::PartitionMismatch, "groups have different sample counts");
    const auto [gn, gd] = distance_sums(*g.samples, *g.eta_d);
    out.per_group.push_back(gn / gd);
    out.dims.push_back(g.eta_d->rows());
    num += gn;
    den += gd;
  }
  const Eigen::Index nu = std::accumulate(out.dims.begin(), out.dims.end(), Eigen::Index{0});
  if (nu_total > 0 && nu != nu_total)
    throw Error(Errc::PartitionMismatch, "group sizes sum to " + std::to_string(nu) + ", expected " +
                                             std::to_string(nu_total));
  out.d2_wg = d2_weighted(out.per_group, out.dims);
  out.d2_direct = num / den;
  return out;
}

double geometric_mean(const std::vector<double>& values) {
  if (values.empty()) throw Error(Errc::EmptySampleList, "no values");
  double acc = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) return 0.0;
    acc += std::log(v);
  }
  return std::exp(acc / double(values.size()));
}

std::vector<Bound> markov_bounds(const std::vector<double>& d2, const std::vector<double>& eps) {
  if (d2.empty()) throw Error(Errc::EmptySampleList, "no distances");
  for (double v : d2)
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::ConfigInvalid, "distances must be finite and non-negative");
  std::vector<Bound> out;
  for (double e : eps) {
    if (!(e > 0.0 && e < 1.0)) throw Error(Errc::InvalidEpsilon, "epsilon must lie in (0, 1), got " + std::to_string(e));
    Bound b;
    b.eps = e;
    if (d2.size() == 1) {
      b.raw = d2[0] / e;
    } else {
      const double r = geometric_mean(d2);
      b.raw = std::pow(r / e, double(d2.size()));
    }
    b.clamped = std::min(b.raw, 1.0);
    out.push_back(b);
  }
  return out;
}

bool gain_check(double d2_wg, double d2_ng) { return d2_wg < d2_ng; }

Moments moment_report(const Eigen::MatrixXd& learned) {
  if (learned.cols() < 2) throw Error(Errc::TooFewSamples, "moment report needs at least two realizations");
  Moments m;
  m.mean = learned.rowwise().mean();
  m.std = ((learned.colwise() - m.mean).rowwise().squaredNorm() / double(learned.cols() - 1)).cwiseSqrt();
  return m;
}

Moments moment_report(const std::vector<Eigen::MatrixXd>& samples) {
  if (samples.empty()) throw Error(Errc::EmptySampleList, "no sample matrices");
  const Eigen::Index d = samples[0].rows();
  Eigen::Index count = 0;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  for (const auto& s : samples) {
    sum += s.rowwise().sum();
    count += s.cols();
  }
  if (count < 2) throw Error(Errc::TooFewSamples, "moment report needs at least two realizations");
  Moments m;
  m.mean = sum / double(count);
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(d);
  for (const auto& s : samples) ss += (s.colwise() - m.mean).rowwise().squaredNorm();
  m.std = (ss / double(count - 1)).cwiseSqrt();
  return m;
}

}  // namespace plom
