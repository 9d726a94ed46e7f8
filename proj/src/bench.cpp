#include "sysid/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <iterator>
#include <fstream>
#include <map>
#include <sstream>

#include "sysid/bayes.hpp"
#include "sysid/errors.hpp"
#include "sysid/kernels.hpp"
#include "sysid/mcmc.hpp"
#include "sysid/metrics.hpp"
#include "sysid/pem.hpp"

namespace sysid::bench {

namespace {

std::string trim(std::string_view s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos)
        return {};
    const auto b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_list(std::string_view s)
{
    std::vector<std::string> out;
    std::stringstream ss{std::string(s)};
    std::string item;
    while (std::getline(ss, item, ','))
        if (auto t = trim(item); !t.empty())
            out.push_back(t);
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value)
{
    std::istringstream in(value);
    T v{};
    in >> v;
    if (in.fail() || !in.eof())
        throw ConfigError("bad value for '" + key + "': " + value);
    return v;
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

Envelope envelope_of(const ConfidenceSet& set, int run, std::string label, const Vector& estimate,
                     const Vector& truth)
{
    Envelope e{run, std::move(label), set.members.front().taps, set.members.front().taps, estimate, truth};
    for (const auto& m : set.members) {
        e.lower = e.lower.cwiseMin(m.taps);
        e.upper = e.upper.cwiseMax(m.taps);
    }
    return e;
}

} // namespace

std::string_view label(Estimator e)
{
    switch (e) {
    case Estimator::PemOracle: return "PEM+OR";
    case Estimator::PemBic: return "PEM+BIC";
    case Estimator::EmpiricalBayes: return "EB";
    case Estimator::FullBayes: return "FB";
    }
    return "?";
}

std::string_view label(Variant v)
{
    return v == Variant::Asymptotic ? "ASYMP" : "LIK";
}

Estimator parse_estimator(std::string_view s)
{
    const std::string k = lower(trim(s));
    if (k == "pem-or" || k == "pem+or") return Estimator::PemOracle;
    if (k == "pem-bic" || k == "pem+bic") return Estimator::PemBic;
    if (k == "eb") return Estimator::EmpiricalBayes;
    if (k == "fb") return Estimator::FullBayes;
    throw ConfigError("unknown estimator '" + std::string(s) + "'");
}

Variant parse_variant(std::string_view s)
{
    const std::string k = lower(trim(s));
    if (k == "asymp") return Variant::Asymptotic;
    if (k == "lik") return Variant::Likelihood;
    throw ConfigError("unknown confidence variant '" + std::string(s) + "'");
}

bool BenchConfig::runs_estimator(Estimator e) const
{
    return std::find(estimators.begin(), estimators.end(), e) != estimators.end();
}

void BenchConfig::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok)
            throw ConfigError(what);
    };
    require(runs >= 0, "runs must be non-negative");
    require(n >= 1, "n must be positive");
    require(T > n, "T must exceed n");
    require(order >= 1, "order must be positive");
    require(pole_radius > 0 && pole_radius < 1, "pole_radius must lie in (0, 1)");
    require(band > 0 && band <= 1, "band must lie in (0, 1]");
    require(snr > 0, "snr must be positive");
    require(alpha > 0 && alpha < 1, "alpha must lie in (0, 1)");
    require(samples_N >= 1, "samples_N must be positive");
    require(fb_burn_in >= 1, "fb_burn_in must be positive");
    require(order_lo >= 1 && order_lo <= order_hi, "bic_order_range must be a non-empty range of positive orders");
    require(T > 2 * order_hi, "T must exceed the largest parameter count");
}

void apply_preset(BenchConfig& cfg, std::string_view name)
{
    if (name == "desk") {
        cfg.runs = 20;
        cfg.samples_N = 2000;
        cfg.fb_burn_in = 1000;
    } else if (name == "paper") {
        cfg.runs = 100;
        cfg.samples_N = 7200;
        cfg.fb_burn_in = 3000;
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
}

void apply_config(BenchConfig& cfg, std::istream& in)
{
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (trim(line).empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));

        if (key == "runs") cfg.runs = parse_number<int>(key, value);
        else if (key == "T") cfg.T = parse_number<Index>(key, value);
        else if (key == "n") cfg.n = parse_number<Index>(key, value);
        else if (key == "order") cfg.order = parse_number<int>(key, value);
        else if (key == "pole_radius") cfg.pole_radius = parse_number<double>(key, value);
        else if (key == "band") cfg.band = parse_number<double>(key, value);
        else if (key == "snr") cfg.snr = parse_number<double>(key, value);
        else if (key == "alpha") cfg.alpha = parse_number<double>(key, value);
        else if (key == "samples_N") cfg.samples_N = parse_number<Index>(key, value);
        else if (key == "fb_burn_in") cfg.fb_burn_in = parse_number<Index>(key, value);
        else if (key == "master_seed") cfg.master_seed = parse_number<std::uint64_t>(key, value);
        else if (key == "record_timing") cfg.record_timing = value == "true" || value == "1";
        else if (key == "bic_order_range") {
            const auto dots = value.find("..");
            if (dots == std::string::npos)
                throw ConfigError("bic_order_range must look like 2..30");
            cfg.order_lo = parse_number<int>(key, trim(value.substr(0, dots)));
            cfg.order_hi = parse_number<int>(key, trim(value.substr(dots + 2)));
        } else if (key == "estimators") {
            cfg.estimators.clear();
            for (const auto& s : split_list(value))
                cfg.estimators.push_back(parse_estimator(s));
        } else if (key == "confidence_variants") {
            cfg.confidence_variants.clear();
            for (const auto& s : split_list(value))
                cfg.confidence_variants.push_back(parse_variant(s));
        } else if (key == "sigma2_mode") {
            if (value == "estimated") cfg.sigma2_mode = Sigma2Mode::Estimated;
            else if (value == "true") cfg.sigma2_mode = Sigma2Mode::True;
            else throw ConfigError("sigma2_mode must be 'estimated' or 'true'");
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
}

void apply_config_file(BenchConfig& cfg, const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file " + path.string());
    apply_config(cfg, in);
}

std::string to_config_text(const BenchConfig& cfg)
{
    std::ostringstream out;
    auto list = [](const auto& items) {
        std::string s;
        for (const auto& it : items)
            s += (s.empty() ? "" : ",") + std::string(label(it));
        return s;
    };
    out << "runs = " << cfg.runs << '\n'
        << "T = " << cfg.T << '\n'
        << "n = " << cfg.n << '\n'
        << "order = " << cfg.order << '\n'
        << "pole_radius = " << format_double(cfg.pole_radius) << '\n'
        << "band = " << format_double(cfg.band) << '\n'
        << "snr = " << format_double(cfg.snr) << '\n'
        << "alpha = " << format_double(cfg.alpha) << '\n'
        << "samples_N = " << cfg.samples_N << '\n'
        << "fb_burn_in = " << cfg.fb_burn_in << '\n'
        << "bic_order_range = " << cfg.order_lo << ".." << cfg.order_hi << '\n'
        << "master_seed = " << cfg.master_seed << '\n'
        << "estimators = " << list(cfg.estimators) << '\n'
        << "confidence_variants = " << list(cfg.confidence_variants) << '\n'
        << "sigma2_mode = " << (cfg.sigma2_mode == Sigma2Mode::True ? "true" : "estimated") << '\n'
        << "record_timing = " << (cfg.record_timing ? "true" : "false") << '\n';
    return out.str();
}

std::string RunRecord::label() const
{
    return variant.empty() ? estimator : estimator + "+" + variant;
}

BenchOutput run_replication(const BenchConfig& cfg, int r)
{
    BenchOutput out;
    const std::uint64_t seed = run_seed(cfg.master_seed, static_cast<std::uint64_t>(r));

    Rng data_rng = make_stream(seed, "data");
    const DiscreteSystem sys = generate_random_system(cfg.order, cfg.pole_radius, data_rng);
    const ImpulseResponse truth = impulse_response(sys, cfg.n);
    const Vector u = generate_bandlimited_input(cfg.T, cfg.band, data_rng);
    Dataset data = simulate_oe(sys, u, cfg.snr, data_rng);
    data.seed = seed;
    const double sigma2 = cfg.sigma2_mode == Sigma2Mode::True ? data.sigma2
                                                              : estimate_noise_variance_ls(data, cfg.n);

    auto base = [&](Estimator e, std::string variant) {
        RunRecord rec;
        rec.run_index = r;
        rec.seed = seed;
        rec.estimator = std::string(label(e));
        rec.variant = std::move(variant);
        return rec;
    };
    auto finish = [&](RunRecord& rec, Clock::time_point start, double extra_ms = 0.0) {
        if (cfg.record_timing)
            rec.wall_ms = elapsed_ms(start) + extra_ms;
        out.records.push_back(std::move(rec));
    };
    auto score_set = [&](RunRecord& rec, const ConfidenceSet& set, const Vector& estimate) {
        rec.coverage = coverage_index(set, truth);
        rec.set_size = set_size_index(set);
        out.envelopes.push_back(envelope_of(set, r, rec.label(), estimate, truth.taps));
    };

    // PEM: one order sweep shared by the oracle and BIC selections.
    const bool want_or = cfg.runs_estimator(Estimator::PemOracle);
    const bool want_bic = cfg.runs_estimator(Estimator::PemBic);
    if (want_or || want_bic) {
        const auto sweep_start = Clock::now();
        std::optional<OrderSweep> sweep;
        std::string sweep_error;
        try {
            sweep = fit_order_range(data, cfg.order_lo, cfg.order_hi, stream_seed(seed, "pem-sweep"));
        } catch (const Error& e) {
            sweep_error = e.tag();
        }
        const double sweep_ms = elapsed_ms(sweep_start);

        for (Estimator est : {Estimator::PemOracle, Estimator::PemBic}) {
            if (!cfg.runs_estimator(est))
                continue;
            const auto start = Clock::now();
            std::optional<OrderChoice> choice;
            std::string error = sweep_error;
            if (sweep) {
                try {
                    choice = est == Estimator::PemOracle ? select_order_oracle(*sweep, truth)
                                                         : select_order_bic(*sweep, data.size());
                } catch (const Error& e) {
                    error = e.tag();
                }
            }
            std::vector<std::string> variants;
            for (Variant v : cfg.confidence_variants)
                variants.emplace_back(label(v));
            if (variants.empty())
                variants.emplace_back();

            for (const auto& vname : variants) {
                const auto vstart = Clock::now();
                RunRecord rec = base(est, vname);
                rec.error = error;
                if (choice) {
                    const ImpulseResponse est_h = choice->fit.theta.impulse_response(cfg.n);
                    rec.fit = impulse_fit(truth, est_h);
                    rec.order_selected = choice->order;
                    const std::string tag = rec.label();
                    Rng rng = make_stream(seed, tag);
                    try {
                        if (vname == "ASYMP") {
                            const auto cov = asymptotic_covariance(choice->fit, data);
                            score_set(rec, sample_asymptotic_confidence(choice->fit, cov, data.size(),
                                                                        cfg.samples_N, cfg.alpha, cfg.n, rng),
                                      est_h.taps);
                        } else if (vname == "LIK") {
                            LikelihoodSamplingOptions opt;
                            opt.burn_in = cfg.fb_burn_in;
                            const auto chain = sample_parameter_chain(choice->fit, data, sigma2,
                                                                      cfg.samples_N, rng, opt);
                            rec.accept_rate = chain.acceptance_rate;
                            const Matrix irs = kernels::impulse_responses(
                                chain.samples, choice->fit.theta.nb(), choice->fit.theta.nf(), cfg.n);
                            score_set(rec, percentile_set(irs, chain.log_target, cfg.alpha), est_h.taps);
                        }
                    } catch (const Error& e) {
                        rec.error = e.tag();
                    }
                }
                finish(rec, vstart, elapsed_ms(start) - elapsed_ms(vstart) + sweep_ms);
            }
        }
    }

    const bool want_eb = cfg.runs_estimator(Estimator::EmpiricalBayes);
    const bool want_fb = cfg.runs_estimator(Estimator::FullBayes);
    if (want_eb || want_fb) {
        const auto eb_start = Clock::now();
        const GramData gram = GramData::from(data.y, build_regressor(data.u, cfg.n));
        std::optional<EbEstimate> eb;
        std::string eb_error;
        try {
            eb = eb_estimate(gram, sigma2);
        } catch (const Error& e) {
            eb_error = e.tag();
        }
        const double eb_ms = elapsed_ms(eb_start);

        auto tag_eta = [&](RunRecord& rec) {
            if (eb) {
                rec.eta_c = eb->eta.c;
                rec.eta_rho = eb->eta.rho;
                rec.eta_lambda = eb->eta.lambda;
            }
        };

        if (want_eb) {
            const auto start = Clock::now();
            RunRecord rec = base(Estimator::EmpiricalBayes, "");
            rec.error = eb_error;
            tag_eta(rec);
            if (eb) {
                rec.fit = impulse_fit(truth, eb->h);
                Rng rng = make_stream(seed, "EB");
                try {
                    score_set(rec, eb_confidence_set(eb->post, cfg.samples_N, cfg.alpha, rng), eb->h.taps);
                } catch (const Error& e) {
                    rec.error = e.tag();
                }
            }
            finish(rec, start, eb_ms);
        }
        if (want_fb) {
            const auto start = Clock::now();
            RunRecord rec = base(Estimator::FullBayes, "");
            rec.error = eb_error;
            tag_eta(rec);
            if (eb) {
                Rng rng = make_stream(seed, "FB");
                try {
                    AMOptions opt;
                    opt.burn_in = cfg.fb_burn_in;
                    const FbResult fb = fb_estimate(gram, sigma2, eb->eta, cfg.samples_N, rng, opt);
                    rec.fit = impulse_fit(truth, ImpulseResponse{fb.h_fb});
                    rec.accept_rate = fb.acceptance_rate;
                    score_set(rec, fb_confidence_set(fb, gram, sigma2, cfg.alpha), fb.h_fb);
                } catch (const Error& e) {
                    rec.error = e.tag();
                }
            }
            finish(rec, start, eb_ms);
        }
    }
    return out;
}

BenchOutput run_benchmark(const BenchConfig& cfg, int jobs)
{
    cfg.validate();
    std::vector<BenchOutput> per_run(static_cast<std::size_t>(cfg.runs));
    std::vector<std::string> failures(static_cast<std::size_t>(cfg.runs));
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs))
    for (int r = 0; r < cfg.runs; ++r) {
        try {
            per_run[static_cast<std::size_t>(r)] = run_replication(cfg, r);
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(r)] = e.what();
        }
    }
    for (int r = 0; r < cfg.runs; ++r)
        if (!failures[static_cast<std::size_t>(r)].empty())
            throw Error("run " + std::to_string(r) + " failed: " + failures[static_cast<std::size_t>(r)]);

    BenchOutput all;
    for (auto& o : per_run) {
        std::move(o.records.begin(), o.records.end(), std::back_inserter(all.records));
        std::move(o.envelopes.begin(), o.envelopes.end(), std::back_inserter(all.envelopes));
    }
    return all;
}

Stats describe(std::vector<double> v)
{
    Stats s;
    s.count = v.size();
    if (v.empty())
        return s;
    std::sort(v.begin(), v.end());
    auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    double sum = 0.0;
    for (double x : v)
        sum += x;
    s.mean = sum / static_cast<double>(v.size());
    s.median = quantile(0.5);
    s.q1 = quantile(0.25);
    s.q3 = quantile(0.75);
    s.min = v.front();
    s.max = v.back();
    return s;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records)
{
    const std::vector<std::string> estimator_order{"PEM+OR", "PEM+BIC", "EB", "FB"};
    const std::vector<std::string> set_order{"PEM+OR+ASYMP", "PEM+OR+LIK", "PEM+BIC+ASYMP",
                                             "PEM+BIC+LIK", "EB", "FB"};
    auto rank = [](const std::vector<std::string>& order, const std::string& label) {
        const auto it = std::find(order.begin(), order.end(), label);
        return it == order.end() ? order.size() : static_cast<std::size_t>(it - order.begin());
    };

    // Fit: one value per (run, estimator).
    std::map<std::pair<std::size_t, std::string>, std::map<int, double>> fits;
    std::map<std::pair<std::size_t, std::string>, std::vector<double>> coverage, size;
    for (const auto& r : records) {
        if (r.fit)
            fits[{rank(estimator_order, r.estimator), r.estimator}].emplace(r.run_index, *r.fit);
        const std::string l = r.label();
        if (r.coverage)
            coverage[{rank(set_order, l), l}].push_back(*r.coverage);
        if (r.set_size)
            size[{rank(set_order, l), l}].push_back(*r.set_size);
    }

    std::vector<SummaryRow> out;
    for (const auto& [key, per_run] : fits) {
        std::vector<double> v;
        for (const auto& [run, f] : per_run)
            v.push_back(f);
        out.push_back({key.second, "fit", describe(std::move(v))});
    }
    for (const auto& [key, v] : coverage)
        out.push_back({key.second, "coverage", describe(v)});
    for (const auto& [key, v] : size)
        out.push_back({key.second, "set_size", describe(v)});
    return out;
}

} // namespace sysid::bench
