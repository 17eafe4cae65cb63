#pragma once
// Command-line driver support: plain-text key/value configs with field-level
// diagnostics, drift resolution (catalog or compiled expressions), CSV and
// binary path persistence, FNV-1a hashing, run manifests, SVG plot emission
// and the orchestration entry points behind the CLI subcommands.

#include <cstdint>
#include <string>
#include <vector>

#include "fbmtk/estimator.hpp"
#include "fbmtk/sde.hpp"

namespace fbmtk {

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

struct ConfigFile {
    std::string source; // file path, or "<inline>" for parsed strings
    std::vector<ConfigEntry> entries;

    const ConfigEntry* find(const std::string& key) const;
    bool has(const std::string& key) const { return find(key) != nullptr; }
};

// `key = value` per line; blank lines and #-comments ignored; duplicate keys
// rejected.  Throws ConfigInvalid naming the source and line.
ConfigFile parse_config_text(const std::string& text, const std::string& source);
ConfigFile parse_config_file(const std::string& path);

struct ExperimentConfig {
    std::string model = "example4"; // catalog name or "custom"
    std::string b0_expression;      // required for model = custom
    double theta = 1.0;
    double sigma = 1.0;
    double H = 0.7;
    bool brownian_reference = false;
    double dt = 0.05;
    double T = 200.0;
    double burn_in_multiplier = 40.0;
    std::size_t replicates = 100;
    std::uint64_t seed = 1;
    std::vector<double> horizons; // defaults to {T/16, T/4, T} rounded to dt
    EstimatorMode mode = EstimatorMode::OracleDecomposition;
    double tau = 0.0; // translation lag for the deviation diagnostics; 0 = off
    std::string outdir = "out";
};

// Validates every field and rejects unknown keys, naming the offending key
// and line.  Environment overrides: FBMTK_SEED, FBMTK_OUTDIR.
ExperimentConfig load_experiment_config(const ConfigFile& file);

// Catalog lookup, or compilation + slope-box probing for custom expressions.
// The contraction guard runs before anything is simulated.
DriftSpec resolve_drift(const ExperimentConfig& config);

TwoSidedOptions grid_options(const ExperimentConfig& config);

std::uint64_t fnv1a64(const void* data, std::size_t n,
                      std::uint64_t basis = 14695981039346656037ull);
// Hash of the canonical serialization (sorted key=value lines), so key order
// in the file does not matter.
std::uint64_t config_hash(const ConfigFile& file);
std::uint64_t file_checksum(const std::string& path);

// CSV export: header t,replicate,component,value then one row per sample
// over the full grid (burn-in prefix included), %.17g round-trip precision.
void write_ensemble_csv(const std::string& path, const PathEnsemble& paths);

// Little-endian binary snapshot, magic FBTKPATH, version 1.
void write_ensemble_binary(const std::string& path, const PathEnsemble& paths);

struct StoredEnsemble {
    TimeGrid grid;
    int dim = 1;
    std::size_t replicates = 0;
    double burn_in = 0.0;
    double coeff_shift = 0.0;
    double H = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> states;
};
StoredEnsemble read_ensemble_binary(const std::string& path);

enum class SuiteStatus { NotRun, Pass, Fail, Blocked };
const char* to_string(SuiteStatus status);

struct SuiteRecord {
    std::string name;
    SuiteStatus status = SuiteStatus::NotRun;
    std::string detail;
    double seconds = 0.0;
};

struct FileRecord {
    std::string path;
    std::uint64_t checksum = 0;
};

struct RunManifest {
    std::uint64_t config_hash = 0;
    std::string version = "fbmtk 1.0.0";
    double wall_clock_seconds = 0.0;
    std::vector<SuiteRecord> suites;
    std::vector<FileRecord> files;

    bool all_passed() const;
    void record_file(const std::string& path);
};

void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

// Minimal static SVG plots (polyline/point series, box series, bars).
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool points_only = false;
};
void write_xy_svg(const std::string& path, const std::string& title,
                  const std::string& x_label, const std::string& y_label,
                  const std::vector<PlotSeries>& series);
struct BoxStat {
    std::string label;
    double q05, q25, q50, q75, q95;
};
void write_box_svg(const std::string& path, const std::string& title,
                   const std::vector<BoxStat>& boxes);
void write_bars_svg(const std::string& path, const std::string& title,
                    const std::vector<std::string>& labels,
                    const std::vector<double>& values);

// Subcommand bodies.  Each writes its outputs plus manifest.json under
// config.outdir and returns the manifest; the CLI exit code is 0 only when
// every recorded suite passed.
RunManifest run_simulate(const ExperimentConfig& config);
RunManifest run_translate_check(const ExperimentConfig& config);
RunManifest run_ap_scan(const ExperimentConfig& config);
RunManifest run_estimate(const ExperimentConfig& config);
RunManifest run_experiment(const ExperimentConfig& config);

} // namespace fbmtk
