#include "plom/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "plom/appgen.hpp"
#include "plom/density.hpp"
#include "plom/error.hpp"
#include "plom/io.hpp"
#include "plom/rng.hpp"

namespace plom {

using nlohmann::json;

json module_versions() {
  return {{"normalize", kVersion}, {"density", kVersion}, {"dmaps", kVersion}, {"partition", kVersion},
          {"sampler", kVersion},   {"metrics", kVersion}, {"appgen", kVersion}, {"cli", kVersion}};
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(Errc::ConfigInvalid, "'" + key + "' expects a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw Error(Errc::ConfigInvalid, "'" + key + "' expects an integer, got '" + v + "'");
  return static_cast<long long>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw Error(Errc::ConfigInvalid, "'" + key + "' expects true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
auto stage(StageClock& clock, const std::string& name, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      clock.record(name, seconds_since(t0));
    } else {
      auto r = f();
      clock.record(name, seconds_since(t0));
      return r;
    }
  } catch (const Error& e) {
    throw Error(e.code(), "stage " + name + ": " + e.what());
  }
}

std::vector<std::string> component_names(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> h;
  for (Eigen::Index k = 0; k < n; ++k) h.push_back(prefix + std::to_string(k + 1));
  return h;
}

json group_json(const GroupRun& g, double d2) {
  json j = {{"components", json::array()}, {"nu_i", g.components.size()}, {"d2", d2}, {"basis", basis_json(g.basis, g.m_o)}};
  for (auto c : g.components) j["components"].push_back(c + 1);
  if (g.constraints) j["constraints"] = to_json(*g.constraints);
  return j;
}

void record_outputs(json& manifest, const std::string& dir, const std::vector<std::string>& files) {
  json out = json::object();
  for (const auto& f : files) out[f] = file_digest((std::filesystem::path(dir) / f).string());
  manifest["outputs"] = out;
}

void write_json(const std::string& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

json constraint_json(const ConstraintOptions& o) {
  return {{"tol", o.tol},
          {"max_iter", o.max_iter},
          {"relax", o.relax},
          {"n_mc_iter", o.n_mc_iter},
          {"hessian", o.hessian == ConstraintHessian::SampleMatrix ? "sample-matrix" : "realization"},
          {"shrink", o.shrink},
          {"lambda_margin", o.lambda_margin}};
}

}  // namespace

json basis_json(const DiffusionBasis& b, Eigen::Index m_o) {
  json j = {{"identity", b.identity}, {"m", b.m}, {"m_o", m_o}};
  if (!b.identity) {
    j["eps_dm"] = b.eps_dm;
    if (m_o >= 2 && m_o < b.eigvals.size()) {
      j["jump"] = b.eigvals(m_o) / b.eigvals(1);
      j["lambda2"] = b.eigvals(1);
      j["plateau"] = b.eigvals(1) / b.eigvals(m_o - 1);
      j["gap"] = std::max(b.eigvals(m_o - 1) / b.eigvals(m_o), b.eigvals(m_o - 2) / b.eigvals(m_o - 1));
    }
  }
  return j;
}

void write_jump_csv(const std::string& path, const std::vector<JumpSample>& curve) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(curve.size()), 6);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& c = curve[i];
    rows.row(static_cast<Eigen::Index>(i)) << c.eps, c.jump, c.lambda2, c.plateau, c.gap, c.accepted ? 1.0 : 0.0;
  }
  write_rows_csv(path, rows, {"eps", "jump", "lambda2", "plateau", "gap", "accepted"});
}

void write_tau_csv(const std::string& path, const std::vector<TauPoint>& tau) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(tau.size()), 3);
  for (std::size_t i = 0; i < tau.size(); ++i)
    rows.row(static_cast<Eigen::Index>(i)) << tau[i].level, tau[i].tau, double(tau[i].groups);
  write_rows_csv(path, rows, {"i_ref", "tau", "groups"});
}

json to_json(const Moments& m) {
  return {{"mean", std::vector<double>(m.mean.data(), m.mean.data() + m.mean.size())},
          {"std", std::vector<double>(m.std.data(), m.std.data() + m.std.size())}};
}

void write_moments_csv(const std::string& path, const Moments& learned, const Moments& training) {
  const Eigen::Index d = learned.mean.size();
  Eigen::MatrixXd rows(d, 5);
  for (Eigen::Index k = 0; k < d; ++k)
    rows.row(k) << double(k + 1), learned.mean(k), learned.std(k), training.mean(k), training.std(k);
  write_rows_csv(path, rows, {"component", "mean", "std", "training_mean", "training_std"});
}

json to_json(const PcaModel& m) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"nu", m.nu},          {"eps_pca", m.eps_pca},
          {"err_pca", m.err_pca}, {"scaling", to_string(m.scaling.method)},
          {"mean", vec(m.mean)},  {"eigvals", vec(m.eigvals)},
          {"offset", vec(m.scaling.offset)}, {"factor", vec(m.scaling.factor)}};
}

nlohmann::json StageClock::to_json() const {
  json j = json::object();
  for (const auto& [k, v] : seconds) j[k] = v;
  return j;
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::ConfigInvalid, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
    const bool is_auto = v == "auto";
    if (key == "input") c.input = v;
    else if (key == "transpose") c.transpose = to_bool(key, v);
    else if (key == "latent_input") c.latent_input = to_bool(key, v);
    else if (key == "scaling") c.scaling = parse_scaling(v);
    else if (key == "eps_pca") c.eps_pca = to_double(key, v);
    else if (key == "mode") c.mode = parse_mode(v);
    else if (key == "constraints") c.constraints = to_bool(key, v);
    else if (key == "n_mc") c.isde.n_mc = to_int(key, v);
    else if (key == "seed") c.isde.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "f0") c.isde.f0 = to_double(key, v);
    else if (key == "delta_r") c.isde.delta_r = is_auto ? 0.0 : to_double(key, v);
    else if (key == "n_burn") c.isde.n_burn = is_auto ? -1 : to_int(key, v);
    else if (key == "m0") c.isde.m0 = is_auto ? 0 : to_int(key, v);
    else if (key == "init") c.isde.init = parse_initial_state(v);
    else if (key == "tau_tol") c.partition.tau_tol = to_double(key, v);
    else if (key == "mi_levels") c.partition.levels = static_cast<int>(to_int(key, v));
    else if (key == "mi_null_samples") c.partition.null_samples = static_cast<int>(to_int(key, v));
    else if (key == "mi_null_sigmas") c.partition.null_sigmas = to_double(key, v);
    else if (key == "jump_threshold") c.select.jump_threshold = to_double(key, v);
    else if (key == "gap_min") c.select.gap_min = to_double(key, v);
    else if (key == "constraint_tol") c.constraint.tol = to_double(key, v);
    else if (key == "constraint_max_iter") c.constraint.max_iter = to_int(key, v);
    else if (key == "relax") c.constraint.relax = to_double(key, v);
    else if (key == "constraint_n_mc") c.constraint.n_mc_iter = to_int(key, v);
    else if (key == "constraint_hessian") {
      if (v == "sample-matrix") c.constraint.hessian = ConstraintHessian::SampleMatrix;
      else if (v == "realization") c.constraint.hessian = ConstraintHessian::Realization;
      else throw Error(Errc::ConfigInvalid, "'constraint_hessian' expects sample-matrix or realization, got '" + v + "'");
    } else if (key == "constraint_shrink") c.constraint.shrink = to_double(key, v);
    else if (key == "lambda_margin") c.constraint.lambda_margin = to_double(key, v);
    else if (key == "eps_list") {
      c.eps_list.clear();
      std::istringstream ls(v);
      std::string item;
      while (std::getline(ls, item, ',')) c.eps_list.push_back(to_double(key, trim(item)));
    } else if (key == "out_dir") c.out_dir = v;
    else throw Error(Errc::ConfigInvalid, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  if (!(c.eps_pca > 0.0 && c.eps_pca < 1.0)) throw Error(Errc::ConfigInvalid, "eps_pca must lie in (0, 1)");
  if (c.isde.n_mc < 1) throw Error(Errc::ConfigInvalid, "n_mc must be at least 1");
  if (c.out_dir.empty()) throw Error(Errc::ConfigInvalid, "out_dir must not be empty");
  return c;
}

std::string render_config(const PipelineConfig& c) {
  auto autod = [](double v) { return v > 0.0 ? fmt(v) : std::string("auto"); };
  std::ostringstream os;
  os << "# plom pipeline configuration\n"
     << "input = " << c.input << "\n"
     << "transpose = " << (c.transpose ? "true" : "false") << "\n"
     << "latent_input = " << (c.latent_input ? "true" : "false") << "\n"
     << "scaling = " << to_string(c.scaling) << "\n"
     << "eps_pca = " << fmt(c.eps_pca) << "\n\n"
     << "mode = " << to_string(c.mode) << "\n"
     << "constraints = " << (c.constraints ? "true" : "false") << "\n"
     << "n_mc = " << c.isde.n_mc << "\n"
     << "seed = " << c.isde.seed << "\n"
     << "f0 = " << fmt(c.isde.f0) << "\n"
     << "delta_r = " << autod(c.isde.delta_r) << "\n"
     << "n_burn = " << (c.isde.n_burn >= 0 ? std::to_string(c.isde.n_burn) : "auto") << "\n"
     << "m0 = " << (c.isde.m0 >= 1 ? std::to_string(c.isde.m0) : "auto") << "\n"
     << "init = " << to_string(c.isde.init) << "\n\n"
     << "tau_tol = " << fmt(c.partition.tau_tol) << "\n"
     << "mi_levels = " << c.partition.levels << "\n"
     << "mi_null_samples = " << c.partition.null_samples << "\n"
     << "mi_null_sigmas = " << fmt(c.partition.null_sigmas) << "\n"
     << "jump_threshold = " << fmt(c.select.jump_threshold) << "\n"
     << "gap_min = " << fmt(c.select.gap_min) << "\n\n"
     << "constraint_tol = " << fmt(c.constraint.tol) << "\n"
     << "constraint_max_iter = " << c.constraint.max_iter << "\n"
     << "relax = " << fmt(c.constraint.relax) << "\n"
     << "constraint_n_mc = " << c.constraint.n_mc_iter << "\n"
     << "constraint_hessian = "
     << (c.constraint.hessian == ConstraintHessian::SampleMatrix ? "sample-matrix" : "realization") << "\n"
     << "constraint_shrink = " << fmt(c.constraint.shrink) << "\n"
     << "lambda_margin = " << fmt(c.constraint.lambda_margin) << "\n\n"
     << "eps_list = ";
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) os << (i ? ", " : "") << fmt(c.eps_list[i]);
  os << "\nout_dir = " << c.out_dir << "\n";
  return os.str();
}

json to_json(const IsdeConfig& c) {
  return {{"f0", c.f0},     {"delta_r", c.delta_r}, {"n_burn", c.n_burn},         {"m0", c.m0},
          {"n_mc", c.n_mc}, {"seed", c.seed},       {"init", to_string(c.init)}, {"stream", c.stream},
          {"stream_index", c.stream_index}};
}

json to_json(const PipelineConfig& c) {
  return {{"input", c.input},
          {"transpose", c.transpose},
          {"latent_input", c.latent_input},
          {"scaling", to_string(c.scaling)},
          {"eps_pca", c.eps_pca},
          {"mode", to_string(c.mode)},
          {"constraints", c.constraints},
          {"isde", to_json(c.isde)},
          {"partition", {{"tau_tol", c.partition.tau_tol}, {"levels", c.partition.levels},
                         {"null_samples", c.partition.null_samples}, {"null_sigmas", c.partition.null_sigmas}}},
          {"select", {{"jump_threshold", c.select.jump_threshold}, {"gap_min", c.select.gap_min},
                      {"lambda2_margin", c.select.lambda2_margin}, {"grid_ratio", c.select.grid_ratio}}},
          {"constraint", constraint_json(c.constraint)},
          {"eps_list", c.eps_list},
          {"out_dir", c.out_dir}};
}

json to_json(const Partition& p) {
  json groups = json::array();
  for (const auto& g : p.groups) {
    json one = json::array();
    for (auto k : g) one.push_back(k + 1);
    groups.push_back(one);
  }
  return {{"groups", groups}, {"n_p", p.count()}, {"i_ref_opt", p.i_ref_opt},
          {"i_ref_low", p.i_ref_low}, {"mi_floor", p.mi_floor}};
}

Partition partition_from_json(const json& j) {
  Partition p;
  try {
    for (const auto& g : j.at("groups")) {
      Group one;
      for (const auto& k : g) one.push_back(k.get<Eigen::Index>() - 1);
      p.groups.push_back(std::move(one));
    }
    if (j.contains("i_ref_opt")) p.i_ref_opt = j["i_ref_opt"].get<double>();
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigInvalid, std::string("malformed partition file: ") + e.what());
  }
  return p;
}

json to_json(const ConstraintState& s) {
  return {{"lambda", std::vector<double>(s.lambda.data(), s.lambda.data() + s.lambda.size())},
          {"err_history", s.err_history},
          {"relax", s.relax},
          {"iterations", s.iterations},
          {"retries", s.retries},
          {"singular_fallback", s.singular_fallback},
          {"converged", s.converged},
          {"final_err", s.final_err}};
}

json to_json(const std::vector<Bound>& b) {
  json a = json::array();
  for (const auto& x : b) a.push_back({{"eps", x.eps}, {"bound", x.clamped}, {"raw", x.raw}});
  return a;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& command) {
  namespace fs = std::filesystem;
  if (cfg.input.empty()) throw Error(Errc::ConfigInvalid, "no input file configured");
  const fs::path dir(cfg.out_dir);
  auto at = [&](const std::string& f) { return (dir / f).string(); };
  StageClock clock;
  std::vector<std::string> outputs;

  PipelineResult res;
  json& man = res.manifest;
  man["tool"] = "plom";
  man["version"] = kVersion;
  man["modules"] = module_versions();
  man["command"] = command;
  man["config"] = to_json(cfg);
  man["stages"] = json::array();

  const CsvMatrix raw = stage(clock, "load", [&] { return read_csv(cfg.input, cfg.transpose); });
  man["stages"].push_back("load");
  man["input"] = {{"rows", raw.data.cols()}, {"columns", raw.data.rows()}, {"digest", file_digest(cfg.input)}};

  Eigen::MatrixXd eta;
  std::shared_ptr<const PcaModel> pca;
  if (cfg.latent_input) {
    eta = raw.data;
    if (eta.cols() < 3) throw Error(Errc::TooFewSamples, "stage load: need at least 3 realizations");
  } else {
    const TrainingSet ts = stage(clock, "scale", [&] { return scale_training(raw.data, cfg.scaling, raw.header); });
    man["stages"].push_back("scale");
    PcaResult pr = stage(clock, "pca", [&] { return pca_reduce(ts, cfg.eps_pca); });
    man["stages"].push_back("pca");
    pca = pr.model;
    eta = pr.latent.eta;
    json pj = to_json(*pca);
    pj["basis"] = "pca_basis.csv";
    write_json(at("pca.json"), pj);
    write_rows_csv(at("pca_basis.csv"), pca->basis);
    outputs.insert(outputs.end(), {"pca.json", "pca_basis.csv"});
  }
  const Eigen::Index nu = eta.rows(), N = eta.cols();
  write_csv(at("latent.csv"), eta, component_names("H", nu));
  outputs.push_back("latent.csv");

  json hyper = {{"nu", nu}, {"N", N}};
  if (pca) hyper["eps_pca"] = cfg.eps_pca, hyper["err_pca"] = pca->err_pca;
  json report = {{"N", N}, {"nu", nu}, {"n_mc", cfg.isde.n_mc}, {"modes", json::object()}};

  LearnedSet learned;
  if (cfg.mode == LearnMode::NoPlom) {
    learned = stage(clock, "sample", [&] { return learn_no_plom(eta, cfg.isde); });
    man["stages"].push_back("sample");
    hyper["basis"] = {{"identity", true}, {"m", N}};
    hyper["isde"] = to_json(learned.provenance.config);
    const double d2 = d2_no_group(learned.samples, eta);
    report["modes"]["no-plom"] = {{"d2", d2}, {"bounds", to_json(markov_bounds({d2}, cfg.eps_list))}};
  } else {
    Partition p = single_group(nu);
    if (cfg.mode == LearnMode::WithGroup) {
      PartitionOptions po = cfg.partition;
      po.seed = cfg.isde.seed;
      p = stage(clock, "partition", [&] { return nu >= 2 ? select_partition(eta, po) : single_group(nu); });
      man["stages"].push_back("partition");
      write_json(at("partition.json"), to_json(p));
      write_tau_csv(at("tau.csv"), p.tau_curve);
      outputs.insert(outputs.end(), {"partition.json", "tau.csv"});
      hyper["partition"] = to_json(p);
    }
    const bool constrained = cfg.mode == LearnMode::WithGroup && cfg.constraints;
    PartitionedLearning pl = stage(clock, "sample", [&] {
      IsdeConfig ic = cfg.isde;
      if (cfg.mode == LearnMode::NoGroup) return learn_no_group(eta, ic, cfg.select);
      return learn_with_partition(eta, p, ic, constrained, cfg.constraint, cfg.select);
    });
    man["stages"].push_back("dmaps");
    man["stages"].push_back("sample");
    learned = pl.learned;

    const auto parts = split(eta, p);
    std::vector<GroupSamples> gs;
    for (std::size_t i = 0; i < pl.groups.size(); ++i) gs.push_back({&pl.groups[i].learned.samples, &parts[i]});
    const GroupDistance gd = d2_with_group(gs, nu);
    json groups = json::array();
    for (std::size_t i = 0; i < pl.groups.size(); ++i) {
      const auto& g = pl.groups[i];
      groups.push_back(group_json(g, gd.per_group[i]));
      groups.back()["isde"] = to_json(g.learned.provenance.config);
      const std::string jf = "jump_" + std::to_string(i + 1) + ".csv";
      if (!g.jump_curve.empty()) {
        write_jump_csv(at(jf), g.jump_curve);
        outputs.push_back(jf);
      }
      if (g.constraints && !g.constraints->converged) res.status = 4;
    }
    hyper["groups"] = groups;
    if (cfg.mode == LearnMode::NoGroup) {
      report["modes"]["no-group"] = {{"d2", gd.d2_direct},
                                     {"basis", basis_json(pl.groups[0].basis, pl.groups[0].m_o)},
                                     {"bounds", to_json(markov_bounds({gd.d2_direct}, cfg.eps_list))}};
    } else {
      json wg = {{"d2", gd.d2_wg}, {"d2_direct", gd.d2_direct}, {"per_group", groups},
                 {"r_geomean", geometric_mean(gd.per_group)},
                 {"bounds", to_json(markov_bounds(gd.per_group, cfg.eps_list))}};
      report["modes"]["with-group"] = wg;
    }
  }
  man["hyperparameters"] = hyper;

  stage(clock, "metrics", [&] {
    const Moments lm = moment_report(learned.samples);
    const Moments tm = moment_report(eta);
    write_moments_csv(at("moments.csv"), lm, tm);
    report["moments"] = to_json(lm);
    write_csv(at("learned_latent.csv"), learned.reshaped(), component_names("H", nu));
    outputs.insert(outputs.end(), {"moments.csv", "learned_latent.csv"});
    if (pca) {
      std::vector<std::string> names = raw.header;
      if (static_cast<Eigen::Index>(names.size()) != pca->mean.size()) names = component_names("X", pca->mean.size());
      write_csv(at("learned.csv"), pca_reconstruct(*pca, learned.reshaped()), names);
      outputs.push_back("learned.csv");
    }
  });
  man["stages"].push_back("metrics");

  write_json(at("report.json"), report);
  outputs.push_back("report.json");
  man["diagnostics"] = report["modes"];
  man["status"] = res.status;
  record_outputs(man, cfg.out_dir, outputs);
  man["timings"] = "timings.json";
  write_json(at("manifest.json"), man);
  write_json(at("timings.json"), clock.to_json());
  res.report = report;
  return res;
}

App1Result reproduce_app1(const App1Options& opts, const std::vector<std::string>& command) {
  namespace fs = std::filesystem;
  if (!(opts.scale > 0.0)) throw Error(Errc::ConfigInvalid, "scale must be positive");
  App1Result r;
  r.N = static_cast<Eigen::Index>(std::llround(1200.0 * opts.scale));
  StageClock clock;

  AppAConfig gen;
  gen.seed = opts.seed;
  const Eigen::MatrixXd eta = stage(clock, "appgen", [&] { return generate(gen, r.N); });
  const auto truth = appa_groups(gen);

  PartitionOptions po = opts.partition;
  po.seed = opts.seed;
  r.partition = stage(clock, "partition", [&] { return select_partition(eta, po); });
  r.partition_recovered = r.partition.groups == truth;

  IsdeConfig ic;
  ic.seed = opts.seed;
  ic.n_mc = opts.n_mc;
  const LearnedSet no_plom = stage(clock, "no-plom", [&] { return learn_no_plom(eta, ic); });
  r.d2_no_plom = d2_no_group(no_plom.samples, eta);

  PartitionedLearning ng = stage(clock, "no-group", [&] { return learn_no_group(eta, ic, opts.select); });
  r.d2_no_group = d2_no_group(ng.learned.samples, eta);
  r.full_basis.basis = ng.groups[0].basis;
  r.full_basis.m_o = ng.groups[0].m_o;
  r.full_basis.curve = ng.groups[0].jump_curve;

  PartitionedLearning wg = stage(clock, "with-group", [&] {
    return learn_with_partition(eta, r.partition, ic, true, opts.constraint, opts.select);
  });
  const auto parts = split(eta, r.partition);
  std::vector<GroupSamples> gs;
  for (std::size_t i = 0; i < wg.groups.size(); ++i) {
    gs.push_back({&wg.groups[i].learned.samples, &parts[i]});
    r.group_moments.push_back(moment_report(wg.groups[i].learned.samples));
    if (wg.groups[i].constraints && !wg.groups[i].constraints->converged) r.status = 4;
  }
  r.with_group = d2_with_group(gs, eta.rows());

  if (opts.unconstrained_groups) {
    stage(clock, "with-group-unconstrained", [&] {
      for (std::size_t i = 0; i < wg.groups.size(); ++i) {
        IsdeConfig gc = ic;
        gc.stream_index = i;
        r.unconstrained_moments.push_back(moment_report(sample_group(parts[i], wg.groups[i].basis, gc).samples));
      }
    });
  }

  r.bounds_no_group = markov_bounds({r.d2_no_group}, opts.eps_list);
  r.bounds_with_group = markov_bounds(r.with_group.per_group, opts.eps_list);

  json groups = json::array();
  for (std::size_t i = 0; i < wg.groups.size(); ++i) groups.push_back(group_json(wg.groups[i], r.with_group.per_group[i]));
  r.report = {{"N", r.N},
              {"nu", eta.rows()},
              {"n_mc", opts.n_mc},
              {"seed", opts.seed},
              {"partition", to_json(r.partition)},
              {"partition_recovered", r.partition_recovered},
              {"modes",
               {{"no-plom", {{"d2", r.d2_no_plom}, {"bounds", to_json(markov_bounds({r.d2_no_plom}, opts.eps_list))}}},
                {"no-group", {{"d2", r.d2_no_group}, {"basis", basis_json(r.full_basis.basis, r.full_basis.m_o)},
                              {"bounds", to_json(r.bounds_no_group)}}},
                {"with-group", {{"d2", r.with_group.d2_wg}, {"d2_direct", r.with_group.d2_direct},
                                {"per_group", groups}, {"r_geomean", geometric_mean(r.with_group.per_group)},
                                {"bounds", to_json(r.bounds_with_group)}}}}},
              {"gain", gain_check(r.with_group.d2_wg, r.d2_no_group)},
              {"ordering", r.with_group.d2_wg < r.d2_no_group && r.d2_no_group < r.d2_no_plom}};
  r.groups = std::move(wg.groups);

  if (!opts.out_dir.empty()) {
    const fs::path dir(opts.out_dir);
    auto at = [&](const std::string& f) { return (dir / f).string(); };
    std::vector<std::string> outputs;
    stage(clock, "write", [&] {
      write_csv(at("train.csv"), eta, component_names("H", eta.rows()));
      write_tau_csv(at("tau.csv"), r.partition.tau_curve);
      write_jump_csv(at("jump_full.csv"), r.full_basis.curve);
      outputs.insert(outputs.end(), {"train.csv", "tau.csv", "jump_full.csv"});
      for (std::size_t i = 0; i < r.groups.size(); ++i) {
        const std::string f = "jump_group" + std::to_string(i + 1) + ".csv";
        write_jump_csv(at(f), r.groups[i].jump_curve);
        outputs.push_back(f);
      }
      const Eigen::VectorXd lam = r.full_basis.basis.eigvals.head(std::min<Eigen::Index>(100, r.full_basis.basis.eigvals.size()));
      write_csv(at("eigvals_full.csv"), lam.transpose(), {"lambda"});
      outputs.push_back("eigvals_full.csv");

      const Eigen::MatrixXd ng_all = ng.learned.reshaped(), wg_all = wg.learned.reshaped(), np_all = no_plom.reshaped();
      Eigen::MatrixXd ref;
      if (opts.n_ref > 0) {
        AppAConfig rc = gen;
        std::uint64_t st = opts.seed;
        rc.seed = splitmix64(st);
        ref = generate(rc, opts.n_ref);
      }
      for (Eigen::Index k = 3; k <= 6; ++k) {
        double lo = eta.row(k).minCoeff(), hi = eta.row(k).maxCoeff();
        if (ref.size()) lo = std::min(lo, ref.row(k).minCoeff()), hi = std::max(hi, ref.row(k).maxCoeff());
        const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(200, lo, hi);
        Eigen::MatrixXd rows(200, 6);
        rows.col(0) = grid;
        rows.col(1) = pdf_curve(eta.row(k).transpose(), grid).p;
        rows.col(2) = ref.size() ? pdf_curve(ref.row(k).transpose(), grid).p : Eigen::VectorXd::Constant(200, std::nan(""));
        rows.col(3) = pdf_curve(np_all.row(k).transpose(), grid).p;
        rows.col(4) = pdf_curve(ng_all.row(k).transpose(), grid).p;
        rows.col(5) = pdf_curve(wg_all.row(k).transpose(), grid).p;
        const std::string f = "pdf_H" + std::to_string(k + 1) + ".csv";
        write_rows_csv(at(f), rows, {"x", "training", "reference", "no_plom", "no_group", "with_group"});
        outputs.push_back(f);
      }
      const std::vector<std::string> h3 = {"H1", "H2", "H3"};
      write_csv(at("cloud_training.csv"), eta.topRows(3), h3);
      write_csv(at("cloud_no_plom.csv"), np_all.topRows(3), h3);
      write_csv(at("cloud_no_group.csv"), ng_all.topRows(3), h3);
      write_csv(at("cloud_with_group.csv"), wg_all.topRows(3), h3);
      outputs.insert(outputs.end(), {"cloud_training.csv", "cloud_no_plom.csv", "cloud_no_group.csv", "cloud_with_group.csv"});
      write_json(at("report.json"), r.report);
      outputs.push_back("report.json");
      write_text_atomic(at("comparison.txt"), render_comparison(r.report));
      outputs.push_back("comparison.txt");
    });
    json man = {{"tool", "plom"},
                {"version", kVersion},
                {"modules", module_versions()},
                {"command", command},
                {"config", {{"seed", opts.seed}, {"scale", opts.scale}, {"N", r.N}, {"n_mc", opts.n_mc},
                            {"n_ref", opts.n_ref}, {"eps_list", opts.eps_list},
                            {"constraint", constraint_json(opts.constraint)}}},
                {"stages", {"appgen", "partition", "no-plom", "no-group", "with-group", "metrics"}},
                {"hyperparameters", {{"nu", eta.rows()}, {"partition", to_json(r.partition)},
                                     {"isde_no_plom", to_json(no_plom.provenance.config)},
                                     {"isde_no_group", to_json(ng.groups[0].learned.provenance.config)},
                                     {"no_group_basis", basis_json(r.full_basis.basis, r.full_basis.m_o)},
                                     {"groups", groups}}},
                {"diagnostics", r.report["modes"]},
                {"status", r.status}};
    record_outputs(man, opts.out_dir, outputs);
    man["timings"] = "timings.json";
    write_json(at("manifest.json"), man);
    write_json(at("timings.json"), clock.to_json());
  }
  return r;
}

std::string render_comparison(const json& report) {
  std::ostringstream os;
  const auto& modes = report.at("modes");
  std::vector<double> eps;
  for (const auto& b : modes.begin()->at("bounds")) eps.push_back(b.at("eps").get<double>());
  auto cell = [](const json& b) {
    std::ostringstream c;
    c << std::setprecision(2) << b.at("bound").get<double>();
    if (b.at("raw").get<double>() > 1.0) c << " (raw " << std::setprecision(3) << b.at("raw").get<double>() << ")";
    return c.str();
  };
  os << std::left << std::setw(18) << "method" << std::setw(10) << "d2";
  for (double e : eps) {
    std::ostringstream h;
    h << "P(d2>=" << e << ")";
    os << std::setw(22) << h.str();
  }
  os << "\n";
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"no-plom", "No PLoM"}, {"no-group", "No Group PLoM"}, {"with-group", "With Group PLoM"}};
  for (const auto& [key, label] : rows) {
    if (!modes.contains(key)) continue;
    const auto& m = modes.at(key);
    std::ostringstream d;
    d << std::setprecision(3) << m.at("d2").get<double>();
    os << std::setw(18) << label << std::setw(10) << d.str();
    for (const auto& b : m.at("bounds")) os << std::setw(22) << cell(b);
    os << "\n";
  }
  if (modes.contains("with-group")) {
    os << "per group d2:";
    for (const auto& g : modes.at("with-group").at("per_group"))
      os << " " << std::setprecision(3) << g.at("d2").get<double>() << " (nu_i " << g.at("nu_i").get<int>() << ")";
    os << "\n";
  }
  if (report.contains("gain")) os << "gain: " << (report.at("gain").get<bool>() ? "yes" : "no") << "\n";
  return os.str();
}

}  // namespace plom
