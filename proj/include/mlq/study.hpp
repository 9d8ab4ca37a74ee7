#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlq/coeff.hpp"
#include "mlq/estimator.hpp"
#include "mlq/quad.hpp"

namespace mlq {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a batch run needs. Built from the plain-text config format
/// documented in the README.
struct RunConfig {
  ProblemSpec problem = analytic_disk_problem();
  std::vector<Family> families{Family::qmc_halton};
  std::vector<Representation> representations{Representation::nestedQ};
  std::vector<int> moments{1};
  int j_min = 1;
  int j_max = 3;
  int replicates = 5;  // MC only
  std::uint64_t seed = 1;
  int reference_offset = 2;
  unsigned threads = 1;
  bool timing = false;  // wall_seconds stays 0 unless set, keeping CSVs reproducible
  std::filesystem::path out = "results";

  int reference_level() const { return j_max + reference_offset; }
  void validate() const;
};

/// Parses the config text; `origin` names the source in error messages.
RunConfig parse_config(std::istream& is, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Seed of MC replicate r; replicate 0 uses the run seed itself.
std::uint64_t replicate_seed(std::uint64_t seed, int replicate);

struct ReferenceField {
  ScalarField field;
  int moment = 1;
  std::vector<std::string> provenance;
};

/// File holding the reference statistic for moment p inside the output directory.
std::filesystem::path reference_path(const std::filesystem::path& out, int p);

/// Builds reference statistics on the hierarchy's reference mesh, one per
/// moment: nodal exact values for the analytic disk, otherwise one
/// single-level QMC estimate at rule level reference_level + 1 whose solves
/// feed every moment.
std::vector<ReferenceField> compute_references(const RunConfig& config, const Hierarchy& hierarchy,
                                               const std::vector<int>& moments);

/// Writes reference files for every configured moment. Throws ConfigError if
/// one exists and `force` is false.
std::vector<std::filesystem::path> generate_reference(const RunConfig& config, bool force,
                                                      std::ostream* log = nullptr);

struct StudySummary {
  std::vector<std::filesystem::path> files;
  std::size_t failures = 0;  // cells that hit a numerical error
};

/// Convergence sweep over j = j_min..j_max for every family, representation
/// and moment. Writes errors_<rep>_p<p>.csv, samples.csv, cost.csv,
/// meshes.csv and run.log into config.out. A cached reference is reused when
/// its provenance matches and regenerated when `force` is set.
StudySummary run_convergence_study(const RunConfig& config, bool force = false,
                                   std::ostream* log = nullptr);

}  // namespace mlq
