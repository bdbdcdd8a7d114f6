// plom: command-line front end for the PLoM-with-partition library.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "plom/appgen.hpp"
#include "plom/density.hpp"
#include "plom/dmaps.hpp"
#include "plom/error.hpp"
#include "plom/io.hpp"
#include "plom/metrics.hpp"
#include "plom/normalize.hpp"
#include "plom/partition.hpp"
#include "plom/pipeline.hpp"
#include "plom/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace plom;

namespace {

std::vector<std::string> g_command;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

void write_json(const std::string& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

std::vector<std::string> names(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> h;
  for (Eigen::Index k = 0; k < n; ++k) h.push_back(prefix + std::to_string(k + 1));
  return h;
}

Partition load_partition(const std::string& path, Eigen::Index nu) {
  Partition p;
  try {
    p = partition_from_json(json::parse(read_text(path)));
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigInvalid, path + ": " + e.what());
  }
  validate(p, nu);
  return p;
}

json manifest_base(const std::string& stage) {
  return {{"tool", "plom"}, {"version", kVersion}, {"modules", module_versions()},
          {"command", g_command}, {"stages", {stage}}};
}

Eigen::Index component_index(Eigen::Index k, Eigen::Index nu) {
  if (k < 1 || k > nu)
    throw Error(Errc::ConfigInvalid, "component " + std::to_string(k) + " outside 1.." + std::to_string(nu));
  return k - 1;
}

}  // namespace

int main(int argc, char** argv) {
  g_command.assign(argv, argv + argc);
  CLI::App app{"Probabilistic learning on manifolds with partition"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  int status = 0;

  // appgen
  auto* gen = app.add_subcommand("appgen", "Generate the 60-dimensional three-group benchmark set");
  Eigen::Index gen_n = 1200;
  std::uint64_t gen_seed = 1, gen_bseed = 0;
  std::string gen_out;
  gen->add_option("--n", gen_n, "Number of realizations")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Seed of the uniform draws");
  gen->add_option("--b-seed", gen_bseed, "Seed of the fixed mixing matrices");
  gen->add_option("--out", gen_out, "Output CSV (one realization per row)")->required();
  gen->callback([&] {
    AppAConfig c;
    c.seed = gen_seed;
    c.b_seed = gen_bseed;
    write_csv(gen_out, generate(c, gen_n), names("H", 60));
  });

  // scale
  auto* sc = app.add_subcommand("scale", "Scale each coordinate of a training set");
  std::string sc_in, sc_out, sc_params, sc_method = "minmax";
  bool sc_t = false;
  sc->add_option("--in", sc_in, "Input CSV")->required()->check(CLI::ExistingFile);
  sc->add_option("--out", sc_out, "Scaled CSV")->required();
  sc->add_option("--method", sc_method, "none, minmax or standardize");
  sc->add_option("--params", sc_params, "JSON file receiving offsets and factors");
  sc->add_flag("--transpose", sc_t, "Input holds one realization per column");
  sc->callback([&] {
    const CsvMatrix raw = read_csv(sc_in, sc_t);
    const TrainingSet ts = scale_training(raw.data, parse_scaling(sc_method), raw.header);
    write_csv(sc_out, ts.data, raw.header);
    if (!sc_params.empty()) {
      const auto& s = ts.scaling;
      write_json(sc_params, {{"method", to_string(s.method)},
                             {"offset", std::vector<double>(s.offset.data(), s.offset.data() + s.offset.size())},
                             {"factor", std::vector<double>(s.factor.data(), s.factor.data() + s.factor.size())}});
    }
  });

  // pca
  auto* pc = app.add_subcommand("pca", "Scale, reduce and whiten a training set");
  std::string pc_in, pc_dir = "plom-pca", pc_method = "minmax";
  double pc_eps = kDefaultEpsPca;
  bool pc_t = false;
  pc->add_option("--in", pc_in, "Input CSV")->required()->check(CLI::ExistingFile);
  pc->add_option("--out-dir", pc_dir, "Output directory");
  pc->add_option("--eps-pca", pc_eps, "Relative reconstruction error target");
  pc->add_option("--method", pc_method, "Scaling applied first: none, minmax or standardize");
  pc->add_flag("--transpose", pc_t, "Input holds one realization per column");
  pc->callback([&] {
    ensure_dir(pc_dir);
    const CsvMatrix raw = read_csv(pc_in, pc_t);
    const PcaResult r = pca_reduce(scale_training(raw.data, parse_scaling(pc_method), raw.header), pc_eps);
    write_csv(join(pc_dir, "latent.csv"), r.latent.eta, names("H", r.model->nu));
    write_rows_csv(join(pc_dir, "pca_basis.csv"), r.model->basis);
    json j = to_json(*r.model);
    j["basis"] = "pca_basis.csv";
    write_json(join(pc_dir, "pca.json"), j);
    std::cout << "nu = " << r.model->nu << ", err_pca = " << r.model->err_pca << "\n";
  });

  // dmaps
  auto* dm = app.add_subcommand("dmaps", "Select the diffusion-maps reduced basis");
  std::string dm_in, dm_dir = "plom-dmaps";
  std::optional<double> dm_eps;
  Eigen::Index dm_mo = 0;
  SelectOptions dm_opts;
  dm->add_option("--in", dm_in, "Latent CSV")->required()->check(CLI::ExistingFile);
  dm->add_option("--out-dir", dm_dir, "Output directory");
  dm->add_option("--eps", dm_eps, "Use this kernel bandwidth instead of the automatic search");
  dm->add_option("--m-o", dm_mo, "Basis size (default nu + 1)");
  dm->add_option("--jump-threshold", dm_opts.jump_threshold, "Largest accepted Jump");
  dm->add_option("--gap-min", dm_opts.gap_min, "Smallest accepted spectral gap ratio");
  dm->callback([&] {
    ensure_dir(dm_dir);
    const Eigen::MatrixXd eta = read_csv(dm_in).data;
    dm_opts.m_o = dm_mo;
    DiffusionBasis b;
    Eigen::Index m_o = dm_mo > 0 ? dm_mo : eta.rows() + 1;
    json j;
    if (dm_eps) {
      if (!(*dm_eps > 0.0)) throw Error(Errc::InvalidEpsilon, "--eps must be positive");
      b = transition_eigs(eta, *dm_eps, m_o);
    } else {
      const BasisSelection s = select_basis(eta, dm_opts);
      b = s.basis;
      m_o = s.m_o;
      write_jump_csv(join(dm_dir, "jump.csv"), s.curve);
      j["median_sqdist"] = s.median_sqdist;
      j["lambda2_monotone"] = s.lambda2_monotone;
    }
    json bj = basis_json(b, m_o);
    j.update(bj);
    write_json(join(dm_dir, "dmaps.json"), j);
    if (!b.identity) {
      write_csv(join(dm_dir, "eigvals.csv"), b.eigvals.transpose(), {"lambda"});
      write_rows_csv(join(dm_dir, "basis.csv"), b.g);
    }
    std::cout << j.dump(2) << "\n";
  });

  // partition
  auto* pt = app.add_subcommand("partition", "Split the latent coordinates into independent groups");
  std::string pt_in, pt_dir = "plom-partition";
  PartitionOptions pt_opts;
  std::string pt_form = "node";
  pt->add_option("--in", pt_in, "Latent CSV")->required()->check(CLI::ExistingFile);
  pt->add_option("--out-dir", pt_dir, "Output directory");
  pt->add_option("--tau-tol", pt_opts.tau_tol, "Largest accepted dependence ratio");
  pt->add_option("--levels", pt_opts.levels, "Number of threshold levels");
  pt->add_option("--null-samples", pt_opts.null_samples, "Shuffled pairs in the null estimate (0 disables the floor)");
  pt->add_option("--null-sigmas", pt_opts.null_sigmas, "Floor = null mean + this many null deviations");
  pt->add_option("--seed", pt_opts.seed, "Seed of the shuffled pairs");
  pt->add_option("--tau-form", pt_form, "node or global");
  pt->callback([&] {
    ensure_dir(pt_dir);
    const Eigen::MatrixXd eta = read_csv(pt_in).data;
    if (pt_form == "node") pt_opts.tau_form = TauForm::Node;
    else if (pt_form == "global") pt_opts.tau_form = TauForm::Global;
    else throw Error(Errc::ConfigInvalid, "unknown tau form '" + pt_form + "'");
    const MutualInfoMatrix mi = pairwise_mi(eta);
    const double floor = mi_null_floor(eta, pt_opts);
    const Partition p = select_partition(mi, floor, pt_opts);
    write_rows_csv(join(pt_dir, "mi.csv"), mi.mi, names("H", eta.rows()));
    write_tau_csv(join(pt_dir, "tau.csv"), p.tau_curve);
    write_json(join(pt_dir, "partition.json"), to_json(p));
    std::cout << to_json(p).dump() << "\n";
  });

  // sample
  auto* sm = app.add_subcommand("sample", "Generate a learned set");
  std::string sm_in, sm_out, sm_groups, sm_manifest, sm_mode = "with-group", sm_init = "auto";
  bool sm_con = false;
  IsdeConfig sm_cfg;
  ConstraintOptions sm_copts;
  sm->add_option("--in", sm_in, "Latent CSV")->required()->check(CLI::ExistingFile);
  sm->add_option("--out", sm_out, "Learned latent CSV (sample matrices one after another)")->required();
  sm->add_option("--groups", sm_groups, "Partition JSON; without it the coordinates form one group")
      ->check(CLI::ExistingFile);
  sm->add_option("--mode", sm_mode, "no-plom, no-group or with-group");
  sm->add_flag("--constraints", sm_con, "Enforce unit second moments per group");
  sm->add_option("--n-mc", sm_cfg.n_mc, "Number of sample matrices")->check(CLI::PositiveNumber);
  sm->add_option("--seed", sm_cfg.seed, "Root seed");
  sm->add_option("--f0", sm_cfg.f0, "Damping");
  sm->add_option("--delta-r", sm_cfg.delta_r, "Step size (0: automatic)");
  sm->add_option("--init", sm_init, "auto, training or stationary");
  sm->add_option("--constraint-tol", sm_copts.tol, "Second-moment error target");
  sm->add_option("--max-iter", sm_copts.max_iter, "Constraint iterations");
  sm->add_option("--manifest", sm_manifest, "Run manifest path (default: next to --out)");
  sm->callback([&] {
    const Eigen::MatrixXd eta = read_csv(sm_in).data;
    sm_cfg.init = parse_initial_state(sm_init);
    const LearnMode mode = parse_mode(sm_mode);
    json man = manifest_base("sample");
    json diag;
    LearnedSet out;
    if (mode == LearnMode::NoPlom) {
      out = learn_no_plom(eta, sm_cfg);
      diag["d2"] = d2_no_group(out.samples, eta);
      man["hyperparameters"] = {{"isde", to_json(out.provenance.config)}, {"m", eta.cols()}};
    } else {
      const Partition p = mode == LearnMode::NoGroup || sm_groups.empty() ? single_group(eta.rows())
                                                                          : load_partition(sm_groups, eta.rows());
      PartitionedLearning pl = mode == LearnMode::NoGroup ? learn_no_group(eta, sm_cfg)
                                                          : learn_with_partition(eta, p, sm_cfg, sm_con, sm_copts);
      out = pl.learned;
      const auto parts = split(eta, p);
      std::vector<GroupSamples> gs;
      for (std::size_t i = 0; i < pl.groups.size(); ++i) gs.push_back({&pl.groups[i].learned.samples, &parts[i]});
      const GroupDistance gd = d2_with_group(gs, eta.rows());
      json groups = json::array();
      for (std::size_t i = 0; i < pl.groups.size(); ++i) {
        const auto& g = pl.groups[i];
        json gj = {{"components", json::array()}, {"d2", gd.per_group[i]}, {"basis", basis_json(g.basis, g.m_o)},
                   {"isde", to_json(g.learned.provenance.config)}};
        for (auto c : g.components) gj["components"].push_back(c + 1);
        if (g.constraints) {
          gj["constraints"] = to_json(*g.constraints);
          if (!g.constraints->converged) status = 4;
        }
        groups.push_back(gj);
      }
      diag = {{"d2", gd.d2_wg}, {"d2_direct", gd.d2_direct}};
      man["hyperparameters"] = {{"partition", to_json(p)}, {"groups", groups}};
    }
    write_csv(sm_out, out.reshaped(), names("H", eta.rows()));
    man["config"] = {{"input", sm_in}, {"mode", to_string(mode)}, {"constraints", sm_con},
                     {"isde", to_json(sm_cfg)}, {"groups", sm_groups}};
    man["diagnostics"] = diag;
    man["status"] = status;
    man["outputs"] = {{fs::path(sm_out).filename().string(), file_digest(sm_out)}};
    const std::string mpath = sm_manifest.empty() ? sm_out + ".manifest.json" : sm_manifest;
    write_json(mpath, man);
    std::cout << diag.dump() << "\n";
  });

  // metrics
  auto* mt = app.add_subcommand("metrics", "Concentration diagnostics of a learned set");
  std::string mt_learned, mt_train, mt_groups, mt_out, mt_moments, mt_report;
  std::vector<double> mt_eps{0.05, 0.1};
  bool mt_table = false;
  mt->add_option("--learned", mt_learned, "Learned latent CSV from 'sample'")->check(CLI::ExistingFile);
  mt->add_option("--training", mt_train, "Latent training CSV")->check(CLI::ExistingFile);
  mt->add_option("--groups", mt_groups, "Partition JSON for the with-group distance")->check(CLI::ExistingFile);
  mt->add_option("--eps", mt_eps, "Bound thresholds in (0, 1)");
  mt->add_option("--out", mt_out, "Report JSON");
  mt->add_option("--moments", mt_moments, "Per-component moments CSV");
  mt->add_flag("--table", mt_table, "Print the three-method comparison table");
  mt->add_option("--report", mt_report, "Existing report JSON to render with --table")->check(CLI::ExistingFile);
  mt->callback([&] {
    if (mt_table && !mt_report.empty()) {
      std::cout << render_comparison(json::parse(read_text(mt_report)));
      return;
    }
    if (mt_learned.empty() || mt_train.empty())
      throw Error(Errc::ConfigInvalid, "--learned and --training are required without --report");
    const Eigen::MatrixXd eta = read_csv(mt_train).data;
    const Eigen::MatrixXd learned = read_csv(mt_learned).data;
    if (learned.rows() != eta.rows())
      throw Error(Errc::DimensionMismatch, "learned set has " + std::to_string(learned.rows()) +
                                               " components, training has " + std::to_string(eta.rows()));
    const LearnedSet ls = from_reshaped(learned, eta.cols());
    json report = {{"N", eta.cols()}, {"nu", eta.rows()}, {"n_mc", ls.samples.size()}, {"modes", json::object()}};
    if (mt_groups.empty()) {
      const double d2 = d2_no_group(ls.samples, eta);
      report["modes"]["no-group"] = {{"d2", d2}, {"bounds", to_json(markov_bounds({d2}, mt_eps))}};
    } else {
      const Partition p = load_partition(mt_groups, eta.rows());
      const auto parts = split(eta, p);
      std::vector<std::vector<Eigen::MatrixXd>> per(p.count());
      for (const auto& s : ls.samples) {
        auto sp = split(s, p);
        for (std::size_t i = 0; i < sp.size(); ++i) per[i].push_back(std::move(sp[i]));
      }
      std::vector<GroupSamples> gs;
      for (std::size_t i = 0; i < per.size(); ++i) gs.push_back({&per[i], &parts[i]});
      const GroupDistance gd = d2_with_group(gs, eta.rows());
      json groups = json::array();
      for (std::size_t i = 0; i < per.size(); ++i) groups.push_back({{"nu_i", gd.dims[i]}, {"d2", gd.per_group[i]}});
      report["modes"]["with-group"] = {{"d2", gd.d2_wg}, {"d2_direct", gd.d2_direct}, {"per_group", groups},
                                       {"r_geomean", geometric_mean(gd.per_group)},
                                       {"bounds", to_json(markov_bounds(gd.per_group, mt_eps))}};
    }
    const Moments lm = moment_report(ls.samples);
    report["moments"] = to_json(lm);
    if (!mt_moments.empty()) write_moments_csv(mt_moments, lm, moment_report(eta));
    if (!mt_out.empty()) write_json(mt_out, report);
    if (mt_table) std::cout << render_comparison(report);
    else std::cout << report["modes"].dump(2) << "\n";
  });

  // density
  auto* dn = app.add_subcommand("density", "Kernel density curves of one or two components");
  std::string dn_in, dn_out;
  Eigen::Index dn_comp = 0, dn_points = 0;
  std::vector<Eigen::Index> dn_joint;
  dn->add_option("--in", dn_in, "CSV of realizations")->required()->check(CLI::ExistingFile);
  dn->add_option("--out", dn_out, "Output CSV")->required();
  auto* oc = dn->add_option("--component", dn_comp, "1-based component for a 1D curve");
  auto* oj = dn->add_option("--joint", dn_joint, "Two 1-based components for a 2D grid")->expected(2);
  oc->excludes(oj);
  dn->add_option("--points", dn_points, "Grid points per axis (default 200 for curves, 60 for grids)");
  dn->callback([&] {
    const Eigen::MatrixXd x = read_csv(dn_in).data;
    if (dn_joint.size() == 2) {
      const Grid2D g = pdf_grid(x.row(component_index(dn_joint[0], x.rows())).transpose(),
                                x.row(component_index(dn_joint[1], x.rows())).transpose(), dn_points > 0 ? dn_points : 60);
      Eigen::MatrixXd rows(g.x.size() * g.y.size(), 3);
      for (Eigen::Index i = 0; i < g.x.size(); ++i)
        for (Eigen::Index j = 0; j < g.y.size(); ++j) rows.row(i * g.y.size() + j) << g.x(i), g.y(j), g.p(i, j);
      write_rows_csv(dn_out, rows, {"x", "y", "density"});
    } else {
      if (dn_comp == 0) throw Error(Errc::ConfigInvalid, "give --component or --joint");
      const Curve1D c = pdf_curve(x.row(component_index(dn_comp, x.rows())).transpose(), dn_points > 0 ? dn_points : 200);
      Eigen::MatrixXd rows(c.x.size(), 2);
      rows << c.x, c.p;
      write_rows_csv(dn_out, rows, {"x", "density"});
    }
  });

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "Run every stage from a configuration file");
  std::string pl_cfg, pl_mode, pl_dir, pl_input;
  std::optional<bool> pl_con;
  pl->add_option("config", pl_cfg, "Configuration file (see 'plom config --defaults')")->required()->check(CLI::ExistingFile);
  pl->add_option("--mode", pl_mode, "Override: no-plom, no-group or with-group");
  pl->add_option("--input", pl_input, "Override the input CSV");
  pl->add_option("--out-dir", pl_dir, "Override the output directory");
  pl->add_flag("--constraints,!--no-constraints", pl_con, "Override constraint enforcement");
  pl->callback([&] {
    PipelineConfig c = parse_config(read_text(pl_cfg));
    if (!pl_mode.empty()) c.mode = parse_mode(pl_mode);
    if (!pl_input.empty()) c.input = pl_input;
    if (!pl_dir.empty()) c.out_dir = pl_dir;
    if (pl_con) c.constraints = *pl_con;
    ensure_dir(c.out_dir);
    const PipelineResult r = run_pipeline(c, g_command);
    status = r.status;
    std::cout << render_comparison(r.report);
  });

  // reproduce-app1
  auto* ra = app.add_subcommand("reproduce-app1", "Run the three-group benchmark with all three methods");
  App1Options ra_opts;
  ra_opts.out_dir = "plom-app1";
  ra->add_option("--seed", ra_opts.seed, "Root seed");
  ra->add_option("--scale", ra_opts.scale, "Training size factor, N = round(1200 scale)")->check(CLI::PositiveNumber);
  ra->add_option("--n-mc", ra_opts.n_mc, "Number of sample matrices")->check(CLI::PositiveNumber);
  ra->add_option("--n-ref", ra_opts.n_ref, "Reference realizations for the pdf curves (0 disables)");
  ra->add_option("--out-dir", ra_opts.out_dir, "Output directory");
  ra->add_flag("--unconstrained", ra_opts.unconstrained_groups, "Also report unconstrained group moments");
  ra->callback([&] {
    ensure_dir(ra_opts.out_dir);
    const App1Result r = reproduce_app1(ra_opts, g_command);
    status = r.status;
    std::cout << "partition recovered: " << (r.partition_recovered ? "yes" : "no") << "\n" << render_comparison(r.report);
  });

  // config
  auto* cf = app.add_subcommand("config", "Print configuration defaults");
  bool cf_def = false;
  cf->add_flag("--defaults", cf_def, "Print the default pipeline configuration")->required();
  cf->callback([&] { std::cout << render_config(PipelineConfig{}); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "plom: " << e.what() << "\n";
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "plom: " << e.what() << "\n";
    return 3;
  }
  return status;
}
