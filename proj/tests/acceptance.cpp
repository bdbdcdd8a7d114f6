// Acceptance checks for the three-group benchmark and the library contracts.
// Prints one PASS/FAIL line per criterion; detail lines are indented.
#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "plom/appgen.hpp"
#include "plom/density.hpp"
#include "plom/dmaps.hpp"
#include "plom/io.hpp"
#include "plom/metrics.hpp"
#include "plom/partition.hpp"
#include "plom/pipeline.hpp"
#include "plom/rng.hpp"
#include "plom/sampler.hpp"

using namespace plom;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes, fixed here so every threshold is visible in one place.
constexpr Eigen::Index kN = 1200;
constexpr Eigen::Index kNmc = 50;
constexpr int kPartitionSeeds = 10;
constexpr int kPartitionNeeded = 9;
constexpr double kPartitionSeconds = 120.0;
constexpr double kNoPlomLo = 1.8, kNoPlomHi = 2.2;
constexpr double kNoPlomAnchor = 2.00083;
constexpr double kAnchorTol = 5e-6;
constexpr int kOrderingSeeds = 5;
constexpr double kNoGroupLo = 0.03, kNoGroupHi = 0.3;
constexpr double kWithGroupLo = 0.005, kWithGroupHi = 0.08;
constexpr double kIdentityTol = 1e-12;
constexpr double kJumpMax = 0.1;
constexpr double kPlateauMax = 10.0;
constexpr double kGapMin = 10.0;
constexpr double kEpsLo = 300.0, kEpsHi = 1300.0;
constexpr double kScoreTol = 1e-4;
constexpr double kMomentTol = 0.01;
constexpr Eigen::Index kMomentDraws = 400000;
constexpr double kConstraintErr = 0.05;
constexpr Eigen::Index kConstraintIter = 20;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void detail(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void detail(const char* fmt, ...) {
  std::va_list ap;
  va_start(ap, fmt);
  std::fputs("    ", stdout);
  std::vprintf(fmt, ap);
  std::fputc('\n', stdout);
  va_end(ap);
}

Eigen::MatrixXd appa(std::uint64_t seed, Eigen::Index n = kN) {
  AppAConfig c;
  c.seed = seed;
  return generate(c, n);
}

std::string groups_text(const std::vector<Group>& groups) {
  std::string s;
  for (const auto& g : groups) {
    if (!s.empty()) s += " ";
    s += "{" + std::to_string(g.front() + 1) + "-" + std::to_string(g.back() + 1) + (g.size() == std::size_t(g.back() - g.front() + 1) ? "" : "*") + "}";
  }
  return s;
}

// Rounds to two significant figures.
double sig2(double v) {
  if (v == 0.0) return 0.0;
  const double p = std::pow(10.0, std::floor(std::log10(std::abs(v))) - 1.0);
  return std::round(v / p) * p;
}

bool criterion1() {
  AppAConfig ref;
  const auto truth = appa_groups(ref);
  int recovered = 0;
  double worst = 0.0;
  for (int k = 0; k < kPartitionSeeds; ++k) {
    const std::uint64_t seed = 1001 + k;
    const Eigen::MatrixXd eta = appa(seed);
    PartitionOptions po;
    po.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    const Partition p = select_partition(eta, po);
    const double t = seconds_since(t0);
    worst = std::max(worst, t);
    const bool ok = p.groups == truth;
    recovered += ok;
    detail("seed %llu: %s  n_p=%lld  i_ref_opt=%.4f  i_ref_low=%.4f  floor=%.4f  %.1fs %s", (unsigned long long)seed,
           groups_text(p.groups).c_str(), (long long)p.count(), p.i_ref_opt, p.i_ref_low, p.mi_floor, t,
           ok ? "" : "(mismatch)");
  }
  detail("recovered %d/%d, slowest %.1fs (limit %.0fs)", recovered, kPartitionSeeds, worst, kPartitionSeconds);
  return recovered >= kPartitionNeeded && worst < kPartitionSeconds;
}

bool criterion2() {
  const double N = double(kN);
  const double anchor = 1.0 + N / (N - 1.0);
  detail("anchor 1 + N/(N-1) = %.6f (expected %.5f)", anchor, kNoPlomAnchor);
  bool ok = std::abs(anchor - kNoPlomAnchor) < kAnchorTol;
  for (std::uint64_t seed : {1, 2, 3}) {
    IsdeConfig ic;
    ic.seed = seed;
    ic.n_mc = kNmc;
    const Eigen::MatrixXd eta = appa(seed);
    const double d2 = d2_no_group(learn_no_plom(eta, ic).samples, eta);
    detail("seed %llu: d2_N(N) = %.4f (window [%.1f, %.1f])", (unsigned long long)seed, d2, kNoPlomLo, kNoPlomHi);
    ok = ok && d2 >= kNoPlomLo && d2 <= kNoPlomHi;
  }
  return ok;
}

bool criterion3() {
  bool ok = true;
  for (int k = 0; k < kOrderingSeeds; ++k) {
    App1Options o;
    o.seed = 1 + k;
    o.n_mc = kNmc;
    o.n_ref = 0;
    const auto t0 = std::chrono::steady_clock::now();
    const App1Result r = reproduce_app1(o);
    const double wg = r.with_group.d2_wg, ng = r.d2_no_group, np = r.d2_no_plom;
    const bool order = wg < ng && ng < np;
    const bool windows = ng >= kNoGroupLo && ng <= kNoGroupHi && wg >= kWithGroupLo && wg <= kWithGroupHi;
    detail("seed %llu: with-group %.4f < no-group %.4f < no-plom %.4f  %s%s  partition %s  %.0fs",
           (unsigned long long)o.seed, wg, ng, np, order ? "ordered" : "NOT ordered",
           windows ? "" : " (outside window)", r.partition_recovered ? "recovered" : "differs", seconds_since(t0));
    std::string per;
    for (std::size_t i = 0; i < r.groups.size(); ++i) {
      char buf[96];
      const auto& c = r.groups[i].constraints;
      std::snprintf(buf, sizeof buf, " d2_%zu=%.4f(err %.3f, %s)", i + 1, r.with_group.per_group[i],
                    c ? c->final_err : 0.0, c && c->converged ? "conv" : "not conv");
      per += buf;
    }
    detail("  groups:%s", per.c_str());
    ok = ok && order && windows;
  }
  detail("windows: no-group [%.3f, %.1f], with-group [%.3f, %.2f]", kNoGroupLo, kNoGroupHi, kWithGroupLo, kWithGroupHi);
  return ok;
}

bool criterion4() {
  bool ok = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    const Eigen::MatrixXd eta = appa(seed, 300);
    AppAConfig ref;
    Partition p;
    p.groups = appa_groups(ref);
    IsdeConfig ic;
    ic.seed = seed;
    ic.n_mc = 10;
    for (bool con : {false, true}) {
      ConstraintOptions co;
      co.max_iter = 5;
      const PartitionedLearning pl = learn_with_partition(eta, p, ic, con, co);
      const auto parts = split(eta, p);
      std::vector<GroupSamples> gs;
      for (std::size_t i = 0; i < parts.size(); ++i) gs.push_back({&pl.groups[i].learned.samples, &parts[i]});
      const GroupDistance gd = d2_with_group(gs, eta.rows());
      const double rel = std::abs(gd.d2_wg - gd.d2_direct) / gd.d2_direct;
      // The direct estimate also matches the assembled learned set.
      const double assembled = d2_no_group(pl.learned.samples, eta);
      const double rel2 = std::abs(assembled - gd.d2_direct) / gd.d2_direct;
      detail("seed %llu N=300 %s: weighted %.12g direct %.12g rel %.2e, assembled rel %.2e",
             (unsigned long long)seed, con ? "constrained" : "free", gd.d2_wg, gd.d2_direct, rel, rel2);
      ok = ok && rel < kIdentityTol && rel2 < kIdentityTol;
    }
  }
  return ok;
}

bool criterion5() {
  const std::vector<double> d2{0.012, 0.015, 0.019};
  const auto b = markov_bounds(d2, {0.05, 0.10});
  const double expect[2] = {0.028, 0.0034};
  bool ok = true;
  for (int i = 0; i < 2; ++i) {
    const bool hit = std::abs(sig2(b[i].clamped) - expect[i]) < 1e-12;
    detail("eps=%.2f: bound %.6g -> %.2g to two figures, expected %.2g  %s", b[i].eps, b[i].clamped, sig2(b[i].clamped),
           expect[i], hit ? "match" : "MISMATCH");
    ok = ok && hit;
  }
  // The three inputs are themselves rounded; the expected 0.028 lies inside their rounding box.
  double lo = 1.0, hi = 1.0;
  for (double v : d2) {
    lo *= (v - 0.0005) / 0.05;
    hi *= (v + 0.0005) / 0.05;
  }
  detail("eps=0.05 bound over inputs +-0.0005: [%.4f, %.4f]", lo, hi);
  return ok;
}

bool criterion6() {
  bool ok = true;
  const Eigen::MatrixXd eta = appa(1);
  const auto t0 = std::chrono::steady_clock::now();
  const BasisSelection s = select_basis(eta);
  const auto& lam = s.basis.eigvals;
  const Eigen::Index mo = s.m_o;
  const double jmp = lam(mo) / lam(1);
  const double plateau = lam(1) / lam(mo - 1);
  const double gap = lam(mo - 1) / lam(mo);
  detail("seed 1: m_o=%lld eps_o=%.1f (med^2 %.2f) Jump=%.4f lambda_2=%.4f  %.1fs", (long long)mo, s.basis.eps_dm,
         s.median_sqdist, jmp, lam(1), seconds_since(t0));
  detail("plateau lambda_2/lambda_m_o = %.3f (need < %.0f), drop lambda_m_o/lambda_(m_o+1) = %.3f (need >= %.2f)",
         plateau, kPlateauMax, gap, kGapMin);
  detail("lambda_(m_o-1)/lambda_m_o = %.3f, lambda_2 monotone on grid: %s", lam(mo - 2) / lam(mo - 1),
         s.lambda2_monotone ? "yes" : "no");
  ok = mo == 61 && jmp <= kJumpMax && s.basis.eps_dm >= kEpsLo && s.basis.eps_dm <= kEpsHi;
  ok = ok && plateau < kPlateauMax && gap >= kGapMin;
  return ok;
}

double score_fd_error(Eigen::Index d, std::uint64_t seed) {
  Rng rng = substream(seed, "acceptance-kde");
  Eigen::MatrixXd c = standard_normal(d, 200, rng);
  c = c.colwise() - c.rowwise().mean();
  const KdeModel m(c);
  const Eigen::MatrixXd pts = standard_normal(d, 100, rng);
  const Eigen::MatrixXd score = kde_score(m, pts);
  double worst = 0.0;
  for (Eigen::Index p = 0; p < pts.cols(); ++p) {
    Eigen::VectorXd fd(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(pts(k, p)));
      Eigen::VectorXd a = pts.col(p), b = pts.col(p);
      a(k) += h;
      b(k) -= h;
      fd(k) = (kde_logpdf(m, a) - kde_logpdf(m, b)) / (2.0 * h);
    }
    worst = std::max(worst, (score.col(p) - fd).norm() / fd.norm());
  }
  return worst;
}

bool criterion7() {
  bool ok = true;
  for (Eigen::Index d : {1, 5, 60}) {
    const double e = score_fd_error(d, 70 + d);
    detail("d=%lld: max relative score error vs central differences %.2e (limit %.0e)", (long long)d, e, kScoreTol);
    ok = ok && e < kScoreTol;
  }
  Rng rng = substream(7, "acceptance-mixture");
  Eigen::MatrixXd c = standard_normal(2, 300, rng);
  c = c.colwise() - c.rowwise().mean();
  const Eigen::MatrixXd cov0 = c * c.transpose() / double(c.cols() - 1);
  c = Eigen::LLT<Eigen::MatrixXd>(cov0).matrixL().solve(c);
  const Eigen::MatrixXd x = kde_draw(KdeModel(c), kMomentDraws, rng);
  const Eigen::VectorXd mean = x.rowwise().mean();
  const Eigen::MatrixXd xc = x.colwise() - mean;
  const Eigen::MatrixXd cov = xc * xc.transpose() / double(x.cols() - 1);
  const double me = mean.cwiseAbs().maxCoeff();
  const double ce = (cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff();
  detail("d=2 mixture, %lld draws: max |mean| %.4f, max |cov - I| %.4f (limit %.2f)", (long long)kMomentDraws, me, ce,
         kMomentTol);
  return ok && me < kMomentTol && ce < kMomentTol;
}

bool criterion8() {
  const Eigen::MatrixXd eta = appa(1);
  AppAConfig ref;
  Partition p;
  p.groups = appa_groups(ref);
  IsdeConfig ic;
  ic.seed = 1;
  ic.n_mc = kNmc;
  ConstraintOptions co;
  co.tol = kConstraintErr;
  co.max_iter = kConstraintIter;
  const auto t0 = std::chrono::steady_clock::now();
  const PartitionedLearning con = learn_with_partition(eta, p, ic, true, co);
  const double tc = seconds_since(t0);
  bool ok = true;
  for (std::size_t i = 0; i < con.groups.size(); ++i) {
    const GroupRun& g = con.groups[i];
    IsdeConfig gc = ic;
    gc.stream_index = i;
    const Moments mc = moment_report(g.learned.samples);
    const Moments mf = moment_report(sample_group(split(eta, p)[i], g.basis, gc).samples);
    const ConstraintState& st = *g.constraints;
    Eigen::Index first = -1;
    for (std::size_t k = 0; k < st.err_history.size(); ++k)
      if (st.err_history[k] < kConstraintErr) {
        first = static_cast<Eigen::Index>(k);
        break;
      }
    const Eigen::ArrayXd dc = (mc.std.array() - 1.0).abs(), df = (mf.std.array() - 1.0).abs();
    const Eigen::Index closer = (dc < df).count();
    std::string hist;
    for (double e : st.err_history) {
      char b[16];
      std::snprintf(b, sizeof b, " %.3f", e);
      hist += b;
    }
    detail("group %zu (nu_i=%zu): err%s  iterations %lld retries %lld", i + 1, g.components.size(), hist.c_str(),
           (long long)st.iterations, (long long)st.retries);
    detail("  std constrained [%.3f, %.3f] free [%.3f, %.3f]; closer to 1 on %lld/%lld components", mc.std.minCoeff(),
           mc.std.maxCoeff(), mf.std.minCoeff(), mf.std.maxCoeff(), (long long)closer, (long long)mc.std.size());
    ok = ok && first >= 0 && st.iterations <= kConstraintIter && closer == mc.std.size();
  }
  detail("constrained learning %.0fs", tc);
  return ok;
}

bool criterion9() {
  const fs::path dir = fs::temp_directory_path() / "plom-acceptance-determinism";
  fs::remove_all(dir);
  fs::create_directories(dir / "out");
  const std::string input = (dir / "train.csv").string();
  write_csv(input, appa(4, 300));
  PipelineConfig c;
  c.input = input;
  c.latent_input = true;
  c.out_dir = (dir / "out").string();
  c.isde.n_mc = 8;
  c.isde.seed = 4;
  c.constraint.max_iter = 6;
  auto snapshot = [&] {
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : fs::directory_iterator(c.out_dir))
      if (e.path().filename() != "timings.json") files.emplace_back(e.path().filename().string(), read_text(e.path().string()));
    std::sort(files.begin(), files.end());
    return files;
  };
  run_pipeline(c, {"acceptance"});
  const auto first = snapshot();
  run_pipeline(c, {"acceptance"});
  const auto second = snapshot();
  bool same = first == second;
  detail("pipeline with-group N=300: %zu artifacts compared byte for byte: %s", first.size(),
         same ? "identical" : "DIFFERENT");

  // Full-scale sampler under a fixed seed.
  const Eigen::MatrixXd eta = appa(1);
  IsdeConfig ic;
  ic.seed = 9;
  ic.n_mc = 5;
  const LearnedSet a = learn_no_plom(eta, ic), b = learn_no_plom(eta, ic);
  bool same_sets = a.samples.size() == b.samples.size();
  for (std::size_t l = 0; same_sets && l < a.samples.size(); ++l)
    same_sets = std::memcmp(a.samples[l].data(), b.samples[l].data(), sizeof(double) * a.samples[l].size()) == 0;
  detail("no-plom N=1200 learned sets: %s", same_sets ? "bit-identical" : "DIFFERENT");
  return same && same_sets;
}

bool criterion10() {
  detail("elasticity-field values are excluded; the code paths they exercise are checked instead");
  const std::vector<double> d2{0.031, 0.027, 0.044, 0.012, 0.058, 0.023, 0.036, 0.019, 0.041};
  bool ok = true;
  for (double eps : {0.05, 0.1}) {
    double prod = 1.0;
    for (double v : d2) prod *= v / eps;
    const Bound b = markov_bounds(d2, {eps})[0];
    const double rel = std::abs(b.raw - prod) / prod;
    detail("n_p=9 eps=%.2f: bound %.6e, direct product %.6e, rel %.1e", eps, b.raw, prod, rel);
    ok = ok && rel < 1e-12;
  }
  // One singleton group next to a larger one.
  AppAConfig gen;
  gen.group_dims = {1, 4};
  gen.seed = 2;
  const Eigen::MatrixXd eta = generate(gen, 200);
  Partition p;
  p.groups = appa_groups(gen);
  IsdeConfig ic;
  ic.n_mc = 4;
  const PartitionedLearning pl = learn_with_partition(eta, p, ic, true);
  const auto parts = split(eta, p);
  std::vector<GroupSamples> gs;
  for (std::size_t i = 0; i < parts.size(); ++i) gs.push_back({&pl.groups[i].learned.samples, &parts[i]});
  const GroupDistance gd = d2_with_group(gs, 5);
  const GroupRun& single = pl.groups[0];
  const bool ident = single.basis.identity && single.m_o == 200 && single.learned.dim() == 1;
  detail("singleton group: identity basis %s, m_o=%lld, d2_1=%.4f; weighted total %.4f vs direct %.4f",
         ident ? "yes" : "no", (long long)single.m_o, gd.per_group[0], gd.d2_wg, gd.d2_direct);
  return ok && ident && std::abs(gd.d2_wg - gd.d2_direct) < 1e-12 * gd.d2_direct;
}

struct Criterion {
  const char* title;
  std::function<bool()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<Criterion> all = {
      {"partition recovery on 10 fresh seeds", criterion1},
      {"no-plom distance and its analytic anchor", criterion2},
      {"concentration ordering on 5 seeds", criterion3},
      {"weighted group distance equals direct distance", criterion4},
      {"product bound arithmetic for three groups", criterion5},
      {"basis selection on the 60-dimensional vector", criterion6},
      {"kernel density score and mixture moments", criterion7},
      {"constraint convergence and standard deviations", criterion8},
      {"determinism of learned sets and manifests", criterion9},
      {"elasticity application excluded; nine-group bound and singleton path", criterion10},
  };
  int only = 0;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::strcmp(argv[i], "--criterion") == 0) only = std::atoi(argv[i + 1]);
  if (only < 0 || only > static_cast<int>(all.size())) {
    std::fprintf(stderr, "usage: plom_acceptance [--criterion 1..%zu]\n", all.size());
    return 2;
  }
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (only != 0 && only != static_cast<int>(i) + 1) continue;
    std::printf("criterion %zu: %s\n", i + 1, all[i].title);
    bool ok = false;
    try {
      ok = all[i].run();
    } catch (const std::exception& e) {
      detail("error: %s", e.what());
    }
    std::printf("%s criterion %zu: %s\n", ok ? "PASS" : "FAIL", i + 1, all[i].title);
    failed += !ok;
  }
  return failed == 0 ? 0 : 1;
}
