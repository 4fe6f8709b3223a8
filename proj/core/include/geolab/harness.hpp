#pragma once

// Experiment harness: flat key-value configs with dotted keys, a content
// hash for manifests, a small worker pool, named experiment recipes, result
// persistence, and plot-data emission.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geolab/data.hpp"
#include "geolab/model.hpp"
#include "geolab/numerics.hpp"

namespace geolab::harness {

inline constexpr const char* kVersionTag = "geolab-0.1.0";

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

// `key = value` lines, `#` comments, dotted section keys. Unknown keys are
// hard errors (silent typos would invalidate slope comparisons).
class KeyValueConfig {
  public:
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_string(const std::string& text);

    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] std::string get_str(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] long get_int(const std::string& key, long fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
    [[nodiscard]] std::vector<double> get_list(const std::string& key,
                                               std::vector<double> fallback) const;

    void require_known_keys(const std::vector<std::string>& known) const;
    [[nodiscard]] std::string canonical() const;  // sorted key=value lines

    [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

struct ExperimentConfig {
    std::string experiment;

    // data/teacher
    data::DistSpec dist;
    std::string teacher_kind = "quadratic";  // quadratic | relu
    double noise_sigma = 1.0;
    int teacher_relu_width = 16;
    std::uint64_t teacher_seed = 1234;

    // network/training
    int width = 256;
    double init_scale = 1.0;
    bool has_output_bias = true;
    model::TrainConfig train;

    // sweeps
    std::vector<int> n_values;
    std::vector<double> alpha_values;
    std::vector<int> d_values;
    std::vector<double> eps_values;
    int n = 1000;

    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string output_dir = "out";
    int workers = 0;  // 0 = default_workers()

    // csv_vs_gaussian
    std::string csv_path;
    int csv_label_column = 0;
    std::optional<double> csv_normalize_scale;

    // slope_vs_n test mode: bypass training with an exact power law
    std::optional<double> stub_exponent;
    double stub_coefficient = 1.0;

    // diagnostics knobs
    int mc_samples = 100000;
    int mc_trials = 60;
    int mc_probes = 200;
    int depth_directions = 256;

    std::string config_echo;  // canonical serialization
    std::string hash;         // content hash of config + version tag

    void finalize();  // recompute echo + hash
};

// Defaults for a registry experiment; throws with the registry listing for
// unknown names.
ExperimentConfig default_config(const std::string& experiment);
ExperimentConfig config_from_kv(const KeyValueConfig& kv);

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct Verdict {
    std::string name;
    bool pass = false;
    double margin = 0.0;  // distance to the threshold, >= 0 when passing
    std::string details;
    int criterion = 0;    // acceptance criterion the verdict maps to
    std::string table;    // table backing this verdict
};

struct ExperimentResult {
    std::string experiment;
    std::string hash;
    std::string version = kVersionTag;
    double wall_time_s = 0.0;
    std::string config_echo;
    std::map<std::string, std::string> tables;  // name -> CSV text
    std::map<std::string, numerics::SlopeFit> fits;
    std::vector<Verdict> verdicts;
    std::string output_root;  // directory when persisted

    [[nodiscard]] bool all_pass() const;
};

std::vector<std::string> registry_names();
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writes manifest.json, tables/*.csv, fits.json, verdicts.json under
// <output_dir>/<experiment>-<hash prefix>/ and records the directory.
void persist_result(ExperimentResult& result, const std::string& output_dir);
ExperimentResult load_result(const std::string& result_dir);

// <table>.dat (whitespace-separated; one block per leading group column when
// the table has >= 3 columns) and <table>.svg under <result_dir>/plots/.
// Returns the list of files written. Byte-identical across re-emissions.
std::vector<std::string> emit_plot_data(const ExperimentResult& result,
                                        const std::string& table);

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

int default_workers();

// Runs job(i) for i in [0, count) on `workers` threads. Exceptions are
// rethrown in the caller after all workers finish.
void parallel_for(int count, int workers, const std::function<void(int)>& job);

std::uint64_t fnv1a64(const std::string& text);
std::string content_hash(const std::string& canonical_config);

}  // namespace geolab::harness
