#include "plom/sampler.hpp"

#include <cmath>
#include <numbers>

#include "plom/density.hpp"
#include "plom/error.hpp"
#include "plom/rng.hpp"

namespace plom {

const char* to_string(InitialState s) {
  switch (s) {
    case InitialState::Auto: return "auto";
    case InitialState::Training: return "training";
    case InitialState::Stationary: return "stationary";
  }
  return "auto";
}

InitialState parse_initial_state(const std::string& name) {
  if (name == "auto") return InitialState::Auto;
  if (name == "training") return InitialState::Training;
  if (name == "stationary") return InitialState::Stationary;
  throw Error(Errc::ConfigInvalid, "unknown initial state '" + name + "'");
}

const char* to_string(LearnMode m) {
  switch (m) {
    case LearnMode::NoPlom: return "no-plom";
    case LearnMode::NoGroup: return "no-group";
    case LearnMode::WithGroup: return "with-group";
  }
  return "no-group";
}

LearnMode parse_mode(const std::string& name) {
  if (name == "no-plom") return LearnMode::NoPlom;
  if (name == "no-group") return LearnMode::NoGroup;
  if (name == "with-group") return LearnMode::WithGroup;
  throw Error(Errc::ConfigInvalid, "unknown mode '" + name + "'");
}

IsdeConfig resolve(const IsdeConfig& in, double s_hat) {
  IsdeConfig c = in;
  if (!(c.f0 > 0.0) || !std::isfinite(c.f0)) throw Error(Errc::ConfigInvalid, "f0 must be positive");
  if (!(c.delta_r > 0.0)) c.delta_r = 2.0 * std::numbers::pi * s_hat / 20.0;
  if (!std::isfinite(c.delta_r)) throw Error(Errc::ConfigInvalid, "delta_r must be finite");
  if (c.n_burn < 0) c.n_burn = 4 * static_cast<Eigen::Index>(std::ceil(1.0 / (c.f0 * c.delta_r)));
  if (c.m0 < 1) c.m0 = static_cast<Eigen::Index>(std::ceil(2.0 * std::numbers::pi / (c.f0 * c.delta_r)));
  if (c.n_mc < 1) throw Error(Errc::ConfigInvalid, "n_mc must be at least 1");
  if (!(c.delta_r < 4.0 * std::numbers::pi * s_hat))
    throw Error(Errc::ConfigInvalid, "delta_r must stay below 4 pi s_hat = " +
                                         std::to_string(4.0 * std::numbers::pi * s_hat));
  return c;
}

Eigen::MatrixXd LearnedSet::reshaped() const {
  Eigen::MatrixXd out(dim(), n_ar());
  for (std::size_t l = 0; l < samples.size(); ++l)
    out.middleCols(static_cast<Eigen::Index>(l) * size(), size()) = samples[l];
  return out;
}

LearnedSet from_reshaped(const Eigen::MatrixXd& reshaped, Eigen::Index N) {
  if (N < 1 || reshaped.cols() % N != 0)
    throw Error(Errc::DimensionMismatch, "learned set width " + std::to_string(reshaped.cols()) +
                                             " is not a multiple of N = " + std::to_string(N));
  LearnedSet ls;
  for (Eigen::Index start = 0; start < reshaped.cols(); start += N) ls.samples.push_back(reshaped.middleCols(start, N));
  if (ls.samples.empty()) throw Error(Errc::EmptySampleList, "learned set is empty");
  return ls;
}

LearnedSet sample_group(const Eigen::MatrixXd& centers, const DiffusionBasis& basis, const IsdeConfig& cfg_in,
                        const Eigen::VectorXd& lambda) {
  const Eigen::Index d = centers.rows(), N = centers.cols();
  if (d < 1) throw Error(Errc::DimensionMismatch, "empty group");
  if (basis.size() != N) throw Error(Errc::DimensionMismatch, "basis built on a different number of realizations");
  if (lambda.size() != 0 && lambda.size() != d) throw Error(Errc::DimensionMismatch, "multiplier length mismatch");

  const KdeModel kde(centers);
  const IsdeConfig cfg = resolve(cfg_in, kde.s_hat());
  const bool ident = basis.identity;
  const Eigen::MatrixXd& g = basis.g;
  Eigen::MatrixXd a;
  if (!ident) {
    Eigen::LLT<Eigen::MatrixXd> gram(g.transpose() * g);
    if (gram.info() != Eigen::Success) throw Error(Errc::ConfigInvalid, "reduced basis is rank deficient");
    a = gram.solve(g.transpose()).transpose();
  }
  auto project = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return ident ? x : Eigen::MatrixXd(x * a); };
  auto lift = [&](const Eigen::MatrixXd& z) -> Eigen::MatrixXd { return ident ? z : Eigen::MatrixXd(z * g.transpose()); };

  Rng rng = substream(cfg.seed, cfg.stream, cfg.stream_index);
  InitialState init = cfg.init;
  if (init == InitialState::Auto) init = ident ? InitialState::Stationary : InitialState::Training;
  Eigen::MatrixXd z = project(init == InitialState::Stationary ? kde_draw(kde, N, rng) : centers);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(z.rows(), z.cols());

  const double dr = cfg.delta_r;
  const double b = cfg.f0 * dr / 4.0;
  const double noise = std::sqrt(cfg.f0) * std::sqrt(dr);
  const Eigen::Index total = cfg.n_burn + cfg.n_mc * cfg.m0;

  LearnedSet out;
  out.provenance.config = cfg;
  out.provenance.constrained = lambda.size() != 0;
  out.samples.reserve(static_cast<std::size_t>(cfg.n_mc));
  for (Eigen::Index step = 1; step <= total; ++step) {
    Eigen::MatrixXd zh = z + (0.5 * dr) * y;
    Eigen::MatrixXd u = lift(zh);
    Eigen::MatrixXd drift = kde_score(kde, u);
    if (lambda.size() != 0) drift -= 2.0 * lambda.asDiagonal() * u;
    Eigen::MatrixXd force = dr * drift + noise * standard_normal(d, N, rng);
    y = ((1.0 - b) * y + project(force)) / (1.0 + b);
    z = zh + (0.5 * dr) * y;
    if (!z.allFinite())
      throw Error(Errc::NumericalBlowup, "non-finite state at step " + std::to_string(step) +
                                             "; reduce delta_r (currently " + std::to_string(dr) + ")");
    if (step > cfg.n_burn && (step - cfg.n_burn) % cfg.m0 == 0) out.samples.push_back(lift(z));
  }
  return out;
}

double second_moment_error(const LearnedSet& ls) {
  if (ls.samples.empty()) throw Error(Errc::EmptySampleList, "no sample matrices");
  Eigen::VectorXd eh = Eigen::VectorXd::Zero(ls.dim());
  for (const auto& m : ls.samples) eh += m.rowwise().squaredNorm();
  eh /= double(ls.n_ar());
  return (Eigen::VectorXd::Ones(ls.dim()) - eh).norm() / std::sqrt(double(ls.dim()));
}

namespace {

struct MomentStats {
  Eigen::VectorXd mean;  // E{h}, h = Y^2
  Eigen::MatrixXd cov;   // covariance of h
};

MomentStats moment_stats(const LearnedSet& ls, ConstraintHessian form) {
  const Eigen::Index d = ls.dim(), N = ls.size();
  const Eigen::Index L = static_cast<Eigen::Index>(ls.samples.size());
  MomentStats st;
  st.mean = Eigen::VectorXd::Zero(d);
  for (const auto& m : ls.samples) st.mean += m.rowwise().squaredNorm();
  st.mean /= double(ls.n_ar());
  st.cov = Eigen::MatrixXd::Zero(d, d);
  if (form == ConstraintHessian::SampleMatrix && L >= 2) {
    // Columns of one sample matrix are dependent, so the response of E{h} to lambda is
    // N times the covariance of the per-matrix averages.
    for (const auto& m : ls.samples) {
      const Eigen::VectorXd hc = m.rowwise().squaredNorm() / double(N) - st.mean;
      st.cov.noalias() += hc * hc.transpose();
    }
    st.cov *= double(N) / double(L - 1);
    return st;
  }
  for (const auto& m : ls.samples) {
    const Eigen::MatrixXd hc = m.array().square().matrix().colwise() - st.mean;
    st.cov.noalias() += hc * hc.transpose();
  }
  st.cov /= double(ls.n_ar() - 1);
  return st;
}

}  // namespace

ConstrainedResult enforce_constraints(const Eigen::MatrixXd& centers, const DiffusionBasis& basis,
                                      const IsdeConfig& cfg, const ConstraintOptions& opts) {
  const Eigen::Index d = centers.rows();
  if (!(opts.tol > 0.0)) throw Error(Errc::ConfigInvalid, "constraint tolerance must be positive");
  if (!(opts.relax > 0.0 && opts.relax <= 1.0)) throw Error(Errc::ConfigInvalid, "relax must lie in (0, 1]");
  if (opts.max_iter < 1) throw Error(Errc::ConfigInvalid, "max_iter must be at least 1");

  if (!(opts.shrink >= 0.0 && opts.shrink <= 1.0)) throw Error(Errc::ConfigInvalid, "shrink must lie in [0, 1]");
  if (!(opts.lambda_margin > 0.0 && opts.lambda_margin <= 1.0))
    throw Error(Errc::ConfigInvalid, "lambda_margin must lie in (0, 1]");
  IsdeConfig iter_cfg = cfg;
  if (opts.n_mc_iter > 0) iter_cfg.n_mc = opts.n_mc_iter;
  const double s_hat = bandwidths(d, centers.cols()).s_hat;
  const double lambda_floor = -(1.0 - opts.lambda_margin) / (2.0 * s_hat * s_hat);

  ConstrainedResult res;
  ConstraintState& st = res.state;
  st.target = Eigen::VectorXd::Ones(d);
  st.lambda = Eigen::VectorXd::Zero(d);
  st.relax = opts.relax;

  Eigen::VectorXd lambda = st.lambda, prev_lambda = st.lambda, prev_step = Eigen::VectorXd::Zero(d);
  double best_err = std::numeric_limits<double>::infinity();
  LearnedSet best;
  Eigen::VectorXd best_lambda = lambda;

  while (st.iterations < opts.max_iter) {
    ++st.iterations;
    const bool can_retry = !st.err_history.empty();
    LearnedSet ls;
    try {
      ls = sample_group(centers, basis, iter_cfg, lambda);
    } catch (const Error& e) {
      if (e.code() != Errc::NumericalBlowup || !can_retry) throw;
      // The multipliers left the region where the tilted density is normalizable.
      ++st.retries;
      st.relax *= 0.5;
      lambda = (prev_lambda - st.relax * prev_step).cwiseMax(lambda_floor);
      continue;
    }
    MomentStats ms = moment_stats(ls, opts.hessian);
    if (opts.shrink > 0.0) {
      const Eigen::VectorXd diag = ms.cov.diagonal();
      ms.cov *= 1.0 - opts.shrink;
      ms.cov.diagonal() = diag;
    }
    const double err = (st.target - ms.mean).norm() / st.target.norm();

    if (st.err_history.size() >= 3 && err > st.err_history.back()) {
      // Overshoot: back off from the last accepted iterate with half the relaxation.
      ++st.retries;
      st.relax *= 0.5;
      lambda = (prev_lambda - st.relax * prev_step).cwiseMax(lambda_floor);
      continue;
    }
    st.err_history.push_back(err);
    if (err < best_err) {
      best_err = err;
      best = std::move(ls);
      best_lambda = lambda;
    }
    if (err <= opts.tol) {
      st.converged = true;
      break;
    }
    Eigen::VectorXd step;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ms.cov);
    const double scale = ms.cov.diagonal().maxCoeff();
    const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                          !(ldlt.vectorD().minCoeff() > 1e-12 * scale);
    if (singular) {
      st.singular_fallback = true;
      step = st.target - ms.mean;
    } else {
      step = ldlt.solve(st.target - ms.mean);
    }
    prev_lambda = lambda;
    prev_step = step;
    lambda = (lambda - st.relax * step).cwiseMax(lambda_floor);
  }

  st.lambda = best_lambda;
  if (iter_cfg.n_mc != cfg.n_mc) {
    res.learned = sample_group(centers, basis, cfg, best_lambda);
  } else {
    res.learned = std::move(best);
  }
  st.final_err = second_moment_error(res.learned);
  res.learned.provenance.constrained = true;
  return res;
}

PartitionedLearning learn_with_partition(const Eigen::MatrixXd& eta, const Partition& p, const IsdeConfig& cfg,
                                         bool constraints_on, const ConstraintOptions& copts,
                                         const SelectOptions& sopts) {
  const auto parts = split(eta, p);
  PartitionedLearning out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    GroupRun run;
    run.index = static_cast<Eigen::Index>(i);
    run.components = p.groups[i];
    IsdeConfig gc = cfg;
    gc.stream_index = i;
    try {
      BasisSelection sel = select_basis(parts[i], sopts);
      run.basis = std::move(sel.basis);
      run.m_o = sel.m_o;
      run.jump_curve = std::move(sel.curve);
      if (constraints_on) {
        ConstrainedResult cr = enforce_constraints(parts[i], run.basis, gc, copts);
        run.constraints = std::move(cr.state);
        run.learned = std::move(cr.learned);
      } else {
        run.learned = sample_group(parts[i], run.basis, gc);
      }
    } catch (const Error& e) {
      throw Error(e.code(), "group " + std::to_string(i + 1) + ": " + e.what());
    }
    run.learned.provenance.mode = p.count() == 1 ? LearnMode::NoGroup : LearnMode::WithGroup;
    run.learned.provenance.group = run.index;
    out.groups.push_back(std::move(run));
  }

  const std::size_t n_mc = out.groups.front().learned.samples.size();
  for (std::size_t l = 0; l < n_mc; ++l) {
    std::vector<Eigen::MatrixXd> blocks;
    for (const auto& g : out.groups) blocks.push_back(g.learned.samples[l]);
    out.learned.samples.push_back(assemble(blocks, p));
  }
  out.learned.provenance = out.groups.front().learned.provenance;
  out.learned.provenance.group.reset();
  out.learned.provenance.constrained = constraints_on;
  return out;
}

PartitionedLearning learn_no_group(const Eigen::MatrixXd& eta, const IsdeConfig& cfg, const SelectOptions& sopts) {
  IsdeConfig c = cfg;
  c.stream = "isde-no-group";
  return learn_with_partition(eta, single_group(eta.rows()), c, false, {}, sopts);
}

LearnedSet learn_no_plom(const Eigen::MatrixXd& eta, const IsdeConfig& cfg) {
  IsdeConfig c = cfg;
  c.stream = "isde-no-plom";
  LearnedSet ls = sample_group(eta, identity_basis(eta.cols()), c);
  ls.provenance.mode = LearnMode::NoPlom;
  return ls;
}

}  // namespace plom
