#pragma once

#include "jdr/diffusion.hpp"
#include "jdr/jdr.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace jdr {

/// Configuration problems (bad key, missing key, unknown experiment) map to
/// exit code 1; anything else that throws maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `dotted.key = value` text config. '#' starts a comment.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_string(const std::string& text,
                                       const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& dflt) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double dflt) const;
    long get_int(const std::string& key) const;
    long get_int(const std::string& key, long dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;
    std::vector<double> get_double_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
    std::string origin_;
};

// --- tabulated hyperparameters ------------------------------------------------

/// The 17 tabulated phi values for the synthetic sweep.
const std::vector<double>& tabulated_phis();

/// Tabulated JDR hyperparameters for a tabulated phi. Dashes in the table
/// mean the corresponding side is inactive (eta = 0).  `k_cap > 0` limits
/// the iteration count.
JdrConfig tabulated_jdr_config(double phi, int k_cap = 0);

/// Tabulated diffusion teleport probability for the same phi grid.
double tabulated_digl_alpha(double phi);

// --- bootstrap ------------------------------------------------------------------

struct BootstrapSummary {
    int n = 0;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Mean with a 95% percentile bootstrap confidence interval.
BootstrapSummary bootstrap_ci(const std::vector<double>& values,
                              int n_resamples, std::uint64_t seed);

/// Interpolated percentile of a sorted sample, q in [0, 1].
double percentile_sorted(const std::vector<double>& sorted, double q);

// --- experiment runner ------------------------------------------------------------

struct ResultRecord {
    std::string experiment;
    std::uint64_t seed = 0;
    std::string condition; // none | jdr | digl
    std::string metric;
    double value = 0.0;
    double wall_ms = 0.0;
};

struct RunOptions {
    std::string out_dir;      // overrides config `out`
    int n_seeds_override = 0; // overrides config `n_seeds`
    int threads = 0;          // 0 = config/env, else override
    bool timing = false;      // record wall-clock in results.csv
};

struct RunOutcome {
    std::vector<ResultRecord> records;
    int exit_code = 0;
    std::string error;
};

/// Execute the experiment described by a config file; writes results.csv and
/// summary.json into the output directory. Partial results are flushed when
/// a seed fails.
RunOutcome run_experiment_file(const std::string& config_path,
                               const RunOptions& opts);

void write_results_csv(const std::vector<ResultRecord>& records,
                       const std::string& path);
void write_summary_json(const std::vector<ResultRecord>& records,
                        const std::string& path, int n_resamples,
                        std::uint64_t seed);

} // namespace jdr
