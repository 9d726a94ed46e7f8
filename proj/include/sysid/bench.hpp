#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sysid/common.hpp"

namespace sysid::bench {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Estimator { PemOracle, PemBic, EmpiricalBayes, FullBayes };
enum class Variant { Asymptotic, Likelihood };
enum class Sigma2Mode { Estimated, True };

std::string_view label(Estimator e);   ///< PEM+OR, PEM+BIC, EB, FB
std::string_view label(Variant v);     ///< ASYMP, LIK
/// Accepts the labels above and the CLI spellings pem-or, pem-bic, eb, fb.
Estimator parse_estimator(std::string_view s);
Variant parse_variant(std::string_view s);

struct BenchConfig {
    int runs = 100;
    Index T = 500;
    Index n = 100;
    int order = 30;
    double pole_radius = 0.95;
    double band = 0.8;
    double snr = 1.0;
    double alpha = 0.95;
    Index samples_N = 7200;
    Index fb_burn_in = 3000;
    int order_lo = 2;
    int order_hi = 30;
    std::uint64_t master_seed = 0;
    std::vector<Estimator> estimators{Estimator::PemOracle, Estimator::PemBic,
                                      Estimator::EmpiricalBayes, Estimator::FullBayes};
    std::vector<Variant> confidence_variants{Variant::Asymptotic, Variant::Likelihood};
    Sigma2Mode sigma2_mode = Sigma2Mode::Estimated;
    /// Fill RunRecord::wall_ms. Off by default so result files are reproducible.
    bool record_timing = false;

    bool runs_estimator(Estimator e) const;
    void validate() const;
};

/// "desk": 20 runs, N = 2000, burn-in 1000. "paper": 100 runs, N = 7200,
/// burn-in 3000.
void apply_preset(BenchConfig& cfg, std::string_view name);

/// Reads `key = value` lines; `#` starts a comment. Keys mirror BenchConfig
/// fields; the order range is written `bic_order_range = 2..30`.
void apply_config(BenchConfig& cfg, std::istream& in);
void apply_config_file(BenchConfig& cfg, const std::filesystem::path& path);
std::string to_config_text(const BenchConfig& cfg);

/// One row per (run, estimator, confidence variant). Numeric fields are
/// empty when not applicable or when the estimator failed.
struct RunRecord {
    int run_index = 0;
    std::uint64_t seed = 0;
    std::string estimator;
    std::string variant;
    std::optional<double> fit;
    std::optional<double> coverage;
    std::optional<double> set_size;
    std::optional<double> wall_ms;
    std::optional<int> order_selected;
    std::optional<double> accept_rate;
    std::string error;
    std::optional<double> eta_c;
    std::optional<double> eta_rho;
    std::optional<double> eta_lambda;

    /// "PEM+OR+ASYMP", "EB", ...
    std::string label() const;
    bool operator==(const RunRecord&) const = default;
};

/// Tap-wise envelope of one confidence set.
struct Envelope {
    int run_index = 0;
    std::string label;
    Vector lower;
    Vector upper;
    Vector estimate;
    Vector truth;
};

struct BenchOutput {
    std::vector<RunRecord> records;
    std::vector<Envelope> envelopes;
};

/// Runs every Monte Carlo replication on up to `jobs` threads. Output does
/// not depend on `jobs`.
BenchOutput run_benchmark(const BenchConfig& cfg, int jobs = 1);

/// Records of a single replication.
BenchOutput run_replication(const BenchConfig& cfg, int run_index);

struct Stats {
    std::size_t count = 0;
    double mean = 0, median = 0, q1 = 0, q3 = 0, min = 0, max = 0;
};

/// Order-independent summary statistics (quartiles by linear interpolation).
Stats describe(std::vector<double> values);

struct SummaryRow {
    std::string label;
    std::string metric;   ///< fit, coverage, set_size
    Stats stats;
};

/// Fit is summarized per estimator (one value per run); coverage and size
/// per confidence set label. Rows follow a fixed label order.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

std::string records_csv_header();
void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records_csv(std::istream& in);

std::string format_summary_text(const std::vector<SummaryRow>& summary);

/// Writes records.csv, summary.csv, summary.txt, the fig*_ plot data and
/// manifest.txt under `out_dir`. Envelope data is written when given.
void emit_report(const std::vector<RunRecord>& records, const std::vector<Envelope>& envelopes,
                 const std::vector<SummaryRow>& summary, const BenchConfig& cfg,
                 const std::filesystem::path& out_dir);

/// Round-trip decimal text of a double.
std::string format_double(double v);

} // namespace sysid::bench
