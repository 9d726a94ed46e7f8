#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sysid/bench.hpp"
#include "sysid/errors.hpp"

namespace fs = std::filesystem;
using namespace sysid::bench;

namespace {

int cmd_run(const std::string& config_path, const std::string& preset, const fs::path& out,
            const std::optional<std::uint64_t>& seed, const std::string& estimators, int jobs,
            bool timing, const std::optional<int>& runs)
{
    BenchConfig cfg;
    if (!preset.empty())
        apply_preset(cfg, preset);
    if (!config_path.empty())
        apply_config_file(cfg, config_path);
    if (seed)
        cfg.master_seed = *seed;
    if (runs)
        cfg.runs = *runs;
    if (!estimators.empty()) {
        std::istringstream list("estimators = " + estimators);
        apply_config(cfg, list);
    }
    if (timing)
        cfg.record_timing = true;
    cfg.validate();

    const BenchOutput result = run_benchmark(cfg, jobs);
    const auto summary = summarize(result.records);
    emit_report(result.records, result.envelopes, summary, cfg, out);
    std::cout << format_summary_text(summary);
    std::cerr << "wrote " << result.records.size() << " records to " << out.string() << '\n';
    return 0;
}

int cmd_summarize(const fs::path& in_dir)
{
    std::ifstream in(in_dir / "records.csv");
    if (!in)
        throw sysid::IoError("cannot open " + (in_dir / "records.csv").string());
    const auto records = read_records_csv(in);
    std::cout << format_summary_text(summarize(records));
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Monte Carlo benchmark of impulse response estimators"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run the Monte Carlo study and write result files");
    std::string config_path, preset, estimators;
    fs::path out = "results";
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    int jobs = 1;
    bool timing = false;
    run->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    run->add_option("--preset", preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    run->add_option("--out", out, "output directory")->capture_default_str();
    run->add_option("--seed", seed, "master seed");
    run->add_option("--runs", runs, "number of replications");
    run->add_option("--estimators", estimators, "comma list of eb, fb, pem-bic, pem-or");
    run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_flag("--timing", timing, "record wall-clock time per record");

    auto* sum = app.add_subcommand("summarize", "print the summary of an existing result directory");
    fs::path in_dir;
    sum->add_option("--in", in_dir, "result directory")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run)
            return cmd_run(config_path, preset, out, seed, estimators, jobs, timing, runs);
        return cmd_summarize(in_dir);
    } catch (const sysid::Error& e) {
        std::cerr << "bench: " << e.tag() << ": " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "bench: " << e.what() << '\n';
    }
    return 1;
}
