#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ncensus/nodal.hpp"
#include "ncensus/stats.hpp"

namespace ncensus {

/// More than 10% of realizations failed; the run was abandoned.
class EnsembleFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Check { FaberKrahn, Sandwich, Helmholtz, Covariance, Perturbation };

std::string to_string(Check check);
Check check_from_string(const std::string& name);

inline constexpr const char* kEngineVersion = "1.0.0";

struct EnsembleConfig {
  SpectralModel model;
  GridSpec grid;
  std::uint64_t realizations = 1;
  std::uint64_t master_seed = 0;
  std::vector<double> radii{10.0, 15.0, 20.0};
  std::vector<double> thresholds{20.0, 50.0, kUnbounded};
  std::vector<std::pair<double, double>> sandwich_pairs{{5.0, 15.0}, {8.0, 20.0}};
  std::vector<double> covariance_lags{1.0, 2.4048255576957728, 5.0};
  double perturbation_b = 1e-3;  // also run at b / 2
  double fk_margin = 0.10;
  AreaEstimator area_estimator = AreaEstimator::CellCount;
  std::set<Check> checks;
  // Not part of the config hash:
  std::filesystem::path output_dir;  // empty: nothing persisted
  bool keep_fields = false;
  unsigned threads = 0;  // 0: NODAL_CENSUS_THREADS, else hardware concurrency

  /// Rejects M < 1, radii outside the window, non-increasing thresholds and
  /// checks the geometry cannot support.
  void validate() const;
};

/// Canonical JSON of the hashed part of the config (fixed key order,
/// thresholds as numbers or "inf").
nlohmann::json config_json(const EnsembleConfig& config);
EnsembleConfig config_from_json(const nlohmann::json& j);
/// 64-bit FNV-1a of config_json(config).dump().
std::uint64_t config_hash(const EnsembleConfig& config);
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

struct PerturbationSummary {
  double median_delta_full = 0.0;  // at b
  double median_delta_half = 0.0;  // at b / 2
  double matched_fraction = 0.0;   // at b
  double fitted_constant = 0.0;    // at b
};

/// Everything the aggregator needs from one realization. Round-trips exactly
/// through the persisted domain table and aggregate file.
struct RealizationResult {
  std::uint64_t index = 0;
  std::vector<DomainRecord> domains;  // label, sign, area, perimeter, boundary_components, touches_window
  double nodal_length = 0.0;
  bool interior_cycle = false;
  std::vector<long long> ns_inside;        // per radius
  std::vector<SandwichVerdict> sandwich;   // pairs x thresholds
  std::optional<double> helmholtz;
  std::vector<double> covariance;          // probe means per lag
  std::optional<PerturbationSummary> perturbation;
};

struct RealizationFailure {
  std::uint64_t index = 0;
  std::string message;
};

struct EnsembleReport {
  EnsembleConfig config;
  std::uint64_t config_hash = 0;
  std::uint64_t completed = 0;
  std::vector<RealizationFailure> failures;
  EmpiricalCdf psi;
  std::optional<NsEstimate> ns;
  JointDistribution joint;
  std::vector<SandwichVerdict> sandwich;  // realization order
  MeanWithError nodal_length;
  nlohmann::json checks;  // one entry per enabled check
  std::vector<std::uint64_t> interior_cycle_realizations;  // nesting graph diagnostic
  // Run information, excluded from the payload.
  double wall_seconds = 0.0;
  unsigned threads = 0;
  std::uint64_t loaded = 0;    // realizations taken from disk
  std::uint64_t computed = 0;  // realizations sampled in this run

  /// Deterministic part of the report: identical for identical configs.
  nlohmann::json payload() const;
  /// {"payload": ..., "timing": ...}
  nlohmann::json to_json() const;
};

/// Test hooks. before_realization may throw to simulate a failure;
/// dispatch_order permutes the work queue.
struct RunHooks {
  std::function<void(std::uint64_t index)> before_realization;
  std::function<std::vector<std::uint64_t>(std::uint64_t count)> dispatch_order;
};

/// Realization i samples with RngStream(master_seed, i); results are folded
/// in index order, so the payload does not depend on scheduling.
EnsembleReport run_ensemble(const EnsembleConfig& config, const RunHooks& hooks = {});

/// Reuses intact realizations in partial_dir (manifest hash must match) and
/// computes the rest. Tables whose checksum fails are recomputed.
EnsembleReport resume_ensemble(const EnsembleConfig& config, const std::filesystem::path& partial_dir,
                               const RunHooks& hooks = {});

/// One realization's pipeline: sample, label, measure, restrict, checks.
RealizationResult run_realization(const EnsembleConfig& config, std::uint64_t index);

/// Worker count: config.threads, else NODAL_CENSUS_THREADS, else hardware.
unsigned resolve_threads(unsigned requested);

/// Domain table parser matching write_domain_csv.
std::vector<DomainRecord> parse_domain_csv(const std::string& text);

/// Reads the psi CDF stored in a report.json payload.
EmpiricalCdf psi_from_report(const nlohmann::json& report);

}  // namespace ncensus
