#include "sysid/bench.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "sysid/errors.hpp"

namespace sysid::bench {

namespace {

std::string opt_text(const std::optional<double>& v)
{
    return v ? format_double(*v) : std::string();
}

std::string opt_text(const std::optional<int>& v)
{
    return v ? std::to_string(*v) : std::string();
}

std::string csv_quote(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char c : s)
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back() += c;
        }
    }
    return fields;
}

template <class T>
T parse_field(const std::string& s, const char* what)
{
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw IoError(std::string("bad ") + what + " field: '" + s + "'");
    return v;
}

template <class T>
std::optional<T> parse_optional(const std::string& s, const char* what)
{
    if (s.empty())
        return std::nullopt;
    return parse_field<T>(s, what);
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text))
        throw IoError("cannot write " + path.string());
}

std::string stats_csv(const std::vector<SummaryRow>& summary, const std::string& metric)
{
    std::ostringstream out;
    out << "label,count,min,q1,median,q3,max,mean\n";
    for (const auto& row : summary) {
        if (row.metric != metric)
            continue;
        const Stats& s = row.stats;
        out << row.label << ',' << s.count << ',' << format_double(s.min) << ',' << format_double(s.q1)
            << ',' << format_double(s.median) << ',' << format_double(s.q3) << ','
            << format_double(s.max) << ',' << format_double(s.mean) << '\n';
    }
    return out.str();
}

std::string points_csv(const std::vector<RunRecord>& records, const std::string& metric)
{
    std::ostringstream out;
    out << "label,run_index," << metric << '\n';
    std::set<std::pair<std::string, int>> seen_fit;
    for (const auto& r : records) {
        std::optional<double> v;
        std::string label = r.label();
        if (metric == "fit") {
            // One point per run and estimator; the fit does not depend on the variant.
            if (!seen_fit.emplace(r.estimator, r.run_index).second)
                continue;
            v = r.fit;
            label = r.estimator;
        } else if (metric == "coverage") {
            v = r.coverage;
        } else {
            v = r.set_size;
        }
        if (v)
            out << label << ',' << r.run_index << ',' << format_double(*v) << '\n';
    }
    return out.str();
}

} // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string records_csv_header()
{
    return "run_index,seed,estimator,variant,fit,coverage,set_size,wall_ms,order_selected,"
           "accept_rate,error,eta_c,eta_rho,eta_lambda";
}

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records)
{
    out << records_csv_header() << '\n';
    for (const auto& r : records) {
        out << r.run_index << ',' << r.seed << ',' << csv_quote(r.estimator) << ',' << csv_quote(r.variant)
            << ',' << opt_text(r.fit) << ',' << opt_text(r.coverage) << ',' << opt_text(r.set_size) << ','
            << opt_text(r.wall_ms) << ',' << opt_text(r.order_selected) << ',' << opt_text(r.accept_rate)
            << ',' << csv_quote(r.error) << ',' << opt_text(r.eta_c) << ',' << opt_text(r.eta_rho) << ','
            << opt_text(r.eta_lambda) << '\n';
    }
}

std::vector<RunRecord> read_records_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw IoError("records file is empty");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != records_csv_header())
        throw IoError("unexpected records header: " + line);

    std::vector<RunRecord> records;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto f = split_csv_line(line);
        if (f.size() != 14)
            throw IoError("records row has " + std::to_string(f.size()) + " fields: " + line);
        RunRecord r;
        r.run_index = parse_field<int>(f[0], "run_index");
        r.seed = parse_field<std::uint64_t>(f[1], "seed");
        r.estimator = f[2];
        r.variant = f[3];
        r.fit = parse_optional<double>(f[4], "fit");
        r.coverage = parse_optional<double>(f[5], "coverage");
        r.set_size = parse_optional<double>(f[6], "set_size");
        r.wall_ms = parse_optional<double>(f[7], "wall_ms");
        r.order_selected = parse_optional<int>(f[8], "order_selected");
        r.accept_rate = parse_optional<double>(f[9], "accept_rate");
        r.error = f[10];
        r.eta_c = parse_optional<double>(f[11], "eta_c");
        r.eta_rho = parse_optional<double>(f[12], "eta_rho");
        r.eta_lambda = parse_optional<double>(f[13], "eta_lambda");
        records.push_back(std::move(r));
    }
    return records;
}

std::string format_summary_text(const std::vector<SummaryRow>& summary)
{
    std::ostringstream out;
    out << std::fixed;
    std::string metric;
    for (const auto& row : summary) {
        if (row.metric != metric) {
            metric = row.metric;
            out << (out.tellp() > 0 ? "\n" : "") << metric << '\n';
            out << std::left << std::setw(16) << "  label" << std::right << std::setw(6) << "n"
                << std::setw(11) << "min" << std::setw(11) << "q1" << std::setw(11) << "median"
                << std::setw(11) << "q3" << std::setw(11) << "max" << std::setw(11) << "mean" << '\n';
        }
        const Stats& s = row.stats;
        out << "  " << std::left << std::setw(14) << row.label << std::right << std::setw(6) << s.count
            << std::setprecision(3) << std::setw(11) << s.min << std::setw(11) << s.q1 << std::setw(11)
            << s.median << std::setw(11) << s.q3 << std::setw(11) << s.max << std::setw(11) << s.mean
            << '\n';
    }
    if (summary.empty())
        out << "no records\n";
    return out.str();
}

void emit_report(const std::vector<RunRecord>& records, const std::vector<Envelope>& envelopes,
                 const std::vector<SummaryRow>& summary, const BenchConfig& cfg,
                 const std::filesystem::path& out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    std::ostringstream rec;
    write_records_csv(rec, records);
    write_file(out_dir / "records.csv", rec.str());

    std::ostringstream sum;
    sum << "label,metric,count,min,q1,median,q3,max,mean\n";
    for (const auto& row : summary) {
        const Stats& s = row.stats;
        sum << row.label << ',' << row.metric << ',' << s.count << ',' << format_double(s.min) << ','
            << format_double(s.q1) << ',' << format_double(s.median) << ',' << format_double(s.q3) << ','
            << format_double(s.max) << ',' << format_double(s.mean) << '\n';
    }
    write_file(out_dir / "summary.csv", sum.str());
    write_file(out_dir / "summary.txt", format_summary_text(summary));

    write_file(out_dir / "fig1_fit.csv", stats_csv(summary, "fit"));
    write_file(out_dir / "fig1_fit_points.csv", points_csv(records, "fit"));
    write_file(out_dir / "fig3_coverage.csv", stats_csv(summary, "coverage"));
    write_file(out_dir / "fig3_coverage_points.csv", points_csv(records, "coverage"));
    write_file(out_dir / "fig4_set_size.csv", stats_csv(summary, "set_size"));
    write_file(out_dir / "fig4_set_size_points.csv", points_csv(records, "set_size"));

    std::ostringstream env;
    env << "run_index,label,tap,lower,upper,estimate,truth\n";
    for (const auto& e : envelopes)
        for (Index k = 0; k < e.lower.size(); ++k)
            env << e.run_index << ',' << e.label << ',' << k + 1 << ',' << format_double(e.lower[k]) << ','
                << format_double(e.upper[k]) << ',' << format_double(e.estimate[k]) << ','
                << format_double(e.truth[k]) << '\n';
    write_file(out_dir / "fig2_envelopes.csv", env.str());

    std::ostringstream man;
    man << "version = " << kVersion << '\n' << "master_seed = " << cfg.master_seed << '\n';
    if (records.empty())
        man << "warning = no records were produced\n";
    std::size_t failed = 0;
    for (const auto& r : records)
        failed += r.error.empty() ? 0 : 1;
    if (failed > 0)
        man << "warning = " << failed << " records carry an error tag\n";
    man << "\n[config]\n" << to_config_text(cfg);
    write_file(out_dir / "manifest.txt", man.str());
}

} // namespace sysid::bench
