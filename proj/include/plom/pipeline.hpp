#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "plom/dmaps.hpp"
#include "plom/metrics.hpp"
#include "plom/normalize.hpp"
#include "plom/partition.hpp"
#include "plom/sampler.hpp"

namespace plom {

inline constexpr const char* kVersion = "0.1.0";

nlohmann::json module_versions();

struct PipelineConfig {
  std::string input;
  bool transpose = false;
  bool latent_input = false;  // input is already the normalized latent matrix
  ScalingMethod scaling = ScalingMethod::MinMax;
  double eps_pca = kDefaultEpsPca;

  LearnMode mode = LearnMode::WithGroup;
  bool constraints = true;
  IsdeConfig isde;
  ConstraintOptions constraint;
  PartitionOptions partition;
  SelectOptions select;

  std::vector<double> eps_list{0.05, 0.1};
  std::string out_dir = "plom-out";
};

// key = value lines, '#' comments. Unknown keys are rejected.
PipelineConfig parse_config(const std::string& text);
std::string render_config(const PipelineConfig& cfg);
nlohmann::json to_json(const PipelineConfig& cfg);

nlohmann::json to_json(const IsdeConfig& c);
nlohmann::json to_json(const Partition& p);  // component indices are 1-based
Partition partition_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ConstraintState& s);
nlohmann::json to_json(const std::vector<Bound>& b);

nlohmann::json to_json(const PcaModel& m);
nlohmann::json to_json(const Moments& m);
nlohmann::json basis_json(const DiffusionBasis& b, Eigen::Index m_o);

void write_jump_csv(const std::string& path, const std::vector<JumpSample>& curve);
void write_tau_csv(const std::string& path, const std::vector<TauPoint>& tau);
void write_moments_csv(const std::string& path, const Moments& learned, const Moments& training);

struct StageClock {
  std::vector<std::pair<std::string, double>> seconds;
  void record(const std::string& stage, double s) { seconds.emplace_back(stage, s); }
  nlohmann::json to_json() const;
};

struct PipelineResult {
  nlohmann::json manifest;
  nlohmann::json report;
  int status = 0;  // 0, or 4 when a constraint iteration did not converge
};

// Runs scale, pca, partition, basis selection, sampling and metrics, writing every
// artifact into cfg.out_dir. The manifest holds only deterministic content; stage
// timings go to timings.json next to it.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& command);

struct App1Options {
  std::uint64_t seed = 1;
  double scale = 1.0;          // N = round(1200 scale)
  Eigen::Index n_mc = 50;
  Eigen::Index n_ref = 100000; // reference set for the pdf curves; 0 disables
  std::string out_dir;         // empty: nothing written
  bool unconstrained_groups = false;  // also learn the groups without constraints
  ConstraintOptions constraint;
  PartitionOptions partition;
  SelectOptions select;
  std::vector<double> eps_list{0.05, 0.1};
};

struct App1Result {
  Eigen::Index N = 0;
  Partition partition;
  bool partition_recovered = false;
  BasisSelection full_basis;
  double d2_no_plom = 0.0;
  double d2_no_group = 0.0;
  GroupDistance with_group;
  std::vector<GroupRun> groups;                  // constrained
  std::vector<Moments> group_moments;            // constrained, per group
  std::vector<Moments> unconstrained_moments;    // when requested
  std::vector<Bound> bounds_no_group;
  std::vector<Bound> bounds_with_group;
  nlohmann::json report;
  int status = 0;
};

App1Result reproduce_app1(const App1Options& opts, const std::vector<std::string>& command = {});

// Three-method comparison text for a report produced by reproduce_app1 or the pipeline.
std::string render_comparison(const nlohmann::json& report);

}  // namespace plom
