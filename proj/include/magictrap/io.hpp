#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "constants.hpp"
#include "dls_model.hpp"
#include "errors.hpp"
#include "fitting.hpp"
#include "ramsey.hpp"
#include "transfer.hpp"

namespace magictrap::io {

// ---------------------------------------------------------------------------
// Numbers and text
// ---------------------------------------------------------------------------

inline std::string format_number(double v, int precision = 9)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(const std::string& text, const std::string& context)
{
    const std::string t = trim(text);
    if (t == "inf" || t == "+inf")
        return std::numeric_limits<double>::infinity();
    if (t == "-inf")
        return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        detail::fail(ErrorCode::Parse, context + ": '" + t + "' is not a number");
    }
    if (used != t.size())
        detail::fail(ErrorCode::Parse, context + ": '" + t + "' is not a number");
    return v;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        detail::fail(ErrorCode::Io, "cannot open '" + path + "': file not found or unreadable");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::string& path, const std::string& contents)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        detail::fail(ErrorCode::Io, "cannot write '" + path + "'");
    out << contents;
    if (!out)
        detail::fail(ErrorCode::Io, "write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Flat key-value documents: one `key = value` per line, '#' starts a comment.
// ---------------------------------------------------------------------------

class KeyValueDocument {
public:
    void set(const std::string& key, std::string value)
    {
        for (auto& [k, v] : entries_)
            if (k == key) {
                v = std::move(value);
                return;
            }
        entries_.emplace_back(key, std::move(value));
    }
    void set(const std::string& key, double value, int precision = 9)
    {
        set(key, format_number(value, precision));
    }

    [[nodiscard]] std::optional<std::string> get(const std::string& key) const
    {
        for (const auto& [k, v] : entries_)
            if (k == key)
                return v;
        return std::nullopt;
    }

    [[nodiscard]] double number(const std::string& key) const
    {
        const auto v = get(key);
        detail::require(v.has_value(), ErrorCode::Parse, "missing key '" + key + "'");
        return parse_number(*v, "key '" + key + "'");
    }

    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& entries() const
    {
        return entries_;
    }

    [[nodiscard]] std::string str() const
    {
        std::string out;
        for (const auto& [k, v] : entries_)
            out += k + " = " + v + "\n";
        return out;
    }

    static KeyValueDocument parse(const std::string& text)
    {
        KeyValueDocument doc;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            const std::string t = trim(line);
            if (t.empty())
                continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                detail::fail(ErrorCode::Parse,
                             "line " + std::to_string(lineno) + ": expected 'key = value'");
            const std::string key = trim(t.substr(0, eq));
            std::string value = trim(t.substr(eq + 1));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
                value = value.substr(1, value.size() - 2);
            if (key.empty())
                detail::fail(ErrorCode::Parse, "line " + std::to_string(lineno) + ": empty key");
            doc.set(key, value);
        }
        return doc;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

inline KeyValueDocument to_document(const TrapCoefficients& c, int precision = 9)
{
    KeyValueDocument doc;
    doc.set("beta1", c.beta1, precision);
    doc.set("beta2_per_gauss", c.beta2, precision);
    doc.set("beta4_per_hz", c.beta4, precision);
    doc.set("polarization_A", c.polarization_A, precision);
    return doc;
}

inline TrapCoefficients coefficients_from_document(const KeyValueDocument& doc)
{
    for (const auto& [k, v] : doc.entries())
        if (k != "beta1" && k != "beta2_per_gauss" && k != "beta4_per_hz" && k != "polarization_A")
            detail::fail(ErrorCode::Parse, "coefficients: unknown key '" + k + "'");
    TrapCoefficients c;
    c.beta1 = doc.number("beta1");
    c.beta2 = doc.number("beta2_per_gauss");
    c.beta4 = doc.number("beta4_per_hz");
    c.polarization_A = doc.number("polarization_A");
    validate(c);
    return c;
}

inline TrapCoefficients read_coefficients(const std::string& path)
{
    return coefficients_from_document(KeyValueDocument::parse(read_file(path)));
}

/// Fit result as key-value pairs with the covariance flattened to cov_<a>_<b>.
inline KeyValueDocument to_document(const FitResult& fit, int precision = 9)
{
    KeyValueDocument doc;
    for (std::size_t i = 0; i < fit.names.size(); ++i) {
        doc.set(fit.names[i], fit.values[i], precision);
        doc.set(fit.names[i] + "_stderr", fit.std_error(fit.names[i]), precision);
    }
    doc.set("chi_square", fit.chi_square, precision);
    doc.set("dof", std::to_string(fit.dof));
    doc.set("reduced_chi_square", fit.reduced_chi_square(), precision);
    for (std::size_t i = 0; i < fit.names.size(); ++i)
        for (std::size_t j = i; j < fit.names.size(); ++j)
            doc.set("cov_" + fit.names[i] + "_" + fit.names[j],
                    fit.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                    precision);
    return doc;
}

// ---------------------------------------------------------------------------
// CSV: first line is a header; numeric records.
// ---------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::optional<std::size_t> column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return i;
        return std::nullopt;
    }
    [[nodiscard]] std::size_t require_column(const std::string& name) const
    {
        const auto c = column(name);
        detail::require(c.has_value(), ErrorCode::Parse, "CSV: missing column '" + name + "'");
        return *c;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ','))
        out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

inline CsvTable parse_csv(const std::string& text)
{
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty() || trim(line).front() == '#')
            continue;
        auto cells = split_csv_line(trim(line));
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size())
            detail::fail(ErrorCode::Parse, "CSV line " + std::to_string(lineno) + ": expected "
                                               + std::to_string(table.header.size())
                                               + " fields, got " + std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells)
            row.push_back(parse_number(c, "CSV line " + std::to_string(lineno)));
        table.rows.push_back(std::move(row));
    }
    detail::require(!table.header.empty(), ErrorCode::Parse, "CSV: empty input");
    return table;
}

inline CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path)); }

inline std::string to_csv(const CsvTable& table, int precision = 9)
{
    std::string out;
    for (std::size_t i = 0; i < table.header.size(); ++i)
        out += (i ? "," : "") + table.header[i];
    out += "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out += (i ? "," : "") + format_number(row[i], precision);
        out += "\n";
    }
    return out;
}

/// DLS measurements: b_field_gauss, depth_mk, dls_hz[, sigma_hz]. Depths are
/// positive millikelvin; rows are grouped by field in order of appearance.
inline std::vector<DlsDataset> dls_datasets_from_csv(const CsvTable& t, bool* had_sigma = nullptr)
{
    const auto cb = t.require_column("b_field_gauss");
    const auto cd = t.require_column("depth_mk");
    const auto cs = t.require_column("dls_hz");
    const auto csig = t.column("sigma_hz");
    if (had_sigma)
        *had_sigma = csig.has_value();
    std::vector<DlsDataset> out;
    for (const auto& row : t.rows) {
        const double b = row[cb];
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const DlsDataset& d) { return d.b_field_gauss == b; });
        if (it == out.end()) {
            out.push_back({b, {}});
            it = out.end() - 1;
        }
        it->points.push_back({depth_hz_from_mk(row[cd]), row[cs], csig ? row[*csig] : 1.0});
    }
    return out;
}

inline CsvTable dls_datasets_to_csv(const std::vector<DlsDataset>& datasets)
{
    CsvTable t{{"b_field_gauss", "depth_mk", "dls_hz", "sigma_hz"}, {}};
    for (const auto& ds : datasets)
        for (const auto& p : ds.points)
            t.rows.push_back({ds.b_field_gauss, depth_mk_from_hz(p.depth_hz), p.dls_hz, p.sigma_hz});
    return t;
}

/// Time series: t_s plus a value column (p or v) and optional sigma.
inline std::vector<TimeSample> time_samples_from_csv(const CsvTable& t,
                                                     const std::string& value_column,
                                                     bool* had_sigma = nullptr)
{
    const auto ct = t.require_column("t_s");
    const auto cv = t.require_column(value_column);
    const auto csig = t.column("sigma");
    if (had_sigma)
        *had_sigma = csig.has_value();
    std::vector<TimeSample> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows)
        out.push_back({row[ct], row[cv], csig ? row[*csig] : 1.0});
    return out;
}

// ---------------------------------------------------------------------------
// Transfer timeline (JSON)
// ---------------------------------------------------------------------------

struct TimelineDocument {
    TransferTimeline timeline;
    std::optional<double> post_transfer_temperature_k;
};

namespace detail_json {

inline double number(const nlohmann::json& j, const char* key, const std::string& where)
{
    if (!j.contains(key))
        detail::fail(ErrorCode::Parse, where + ": missing '" + key + "'");
    if (!j.at(key).is_number())
        detail::fail(ErrorCode::Parse, where + ": '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline std::optional<double> optional_number(const nlohmann::json& j, const char* key,
                                             const std::string& where)
{
    if (!j.contains(key) || j.at(key).is_null())
        return std::nullopt;
    return number(j, key, where);
}

inline TrapFieldConfig trap(const nlohmann::json& j, const TrapCoefficients& c,
                            const std::string& where)
{
    TrapFieldConfig cfg;
    cfg.coeffs = c;
    cfg.mean_depth_hz = depth_hz_from_mk(number(j, "depth_mk", where));
    cfg.temperature_k = number(j, "temperature_uk", where) * 1e-6;
    cfg.b_field_gauss = number(j, "b_field_gauss", where);
    cfg.detuning_hz = optional_number(j, "detuning_hz", where).value_or(0.0);
    return cfg;
}

} // namespace detail_json

/// Parses a timeline document. `coefficients`, when given, overrides any
/// coefficient block inside the document.
inline TimelineDocument parse_timeline(const std::string& text,
                                       std::optional<TrapCoefficients> coefficients = std::nullopt)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        detail::fail(ErrorCode::Parse, std::string("timeline: ") + e.what());
    }
    if (!j.is_object())
        detail::fail(ErrorCode::Parse, "timeline: top level must be an object");

    TrapCoefficients c = presets::experimental;
    if (coefficients) {
        c = *coefficients;
    } else if (j.contains("coefficients")) {
        const auto& cj = j.at("coefficients");
        KeyValueDocument doc;
        for (const char* k : {"beta1", "beta2_per_gauss", "beta4_per_hz", "polarization_A"})
            doc.set(k, detail_json::number(cj, k, "timeline.coefficients"), 17);
        c = coefficients_from_document(doc);
    }

    TimelineDocument out;
    auto& tl = out.timeline;
    tl.t1_s = detail_json::number(j, "t1_s", "timeline");
    tl.t2prime_s = detail_json::number(j, "t2prime_s", "timeline");
    if (j.contains("register"))
        tl.register_config = detail_json::trap(j.at("register"), c, "timeline.register");
    tl.t2star_static_override_s = detail_json::optional_number(j, "t2star_static_override_s", "timeline");
    tl.t2star_mobile_override_s = detail_json::optional_number(j, "t2star_mobile_override_s", "timeline");
    if (auto t = detail_json::optional_number(j, "post_transfer_temperature_uk", "timeline"))
        out.post_transfer_temperature_k = *t * 1e-6;

    if (!j.contains("segments") || !j.at("segments").is_array())
        detail::fail(ErrorCode::Parse, "timeline: 'segments' must be an array");
    std::size_t i = 0;
    for (const auto& sj : j.at("segments")) {
        const std::string where = "timeline.segments[" + std::to_string(i++) + "]";
        if (!sj.contains("phase") || !sj.at("phase").is_string())
            detail::fail(ErrorCode::Parse, where + ": missing 'phase'");
        const auto phase = phase_from_string(sj.at("phase").get<std::string>());
        if (!phase)
            detail::fail(ErrorCode::Parse,
                         where + ": unknown phase '" + sj.at("phase").get<std::string>() + "'");
        TransferSegment seg;
        seg.phase = *phase;
        seg.duration_s = detail_json::number(sj, "duration_s", where);
        seg.config = detail_json::trap(sj, c, where);
        seg.t2_override_s = detail_json::optional_number(sj, "t2_override_s", where);
        tl.segments.push_back(seg);
    }
    return out;
}

inline KeyValueDocument to_document(const BudgetReport& r, int precision = 9)
{
    KeyValueDocument doc;
    doc.set("retained_coherence", r.retained_coherence, precision);
    doc.set("t2star_static_s", r.t2star_static_s, precision);
    doc.set("t2star_mobile_s", r.t2star_mobile_s, precision);
    doc.set("tau_static_s", r.tau_static_s, precision);
    doc.set("tau_mobile_s", r.tau_mobile_s, precision);
    doc.set("fractional_tau_loss", r.fractional_tau_loss, precision);
    for (std::size_t i = 0; i < r.per_segment.size(); ++i) {
        const auto& s = r.per_segment[i];
        const std::string p = "segment" + std::to_string(i) + "_";
        doc.set(p + "phase", std::string(to_string(s.phase)));
        doc.set(p + "duration_s", s.duration_s, precision);
        doc.set(p + "effective_t2_s", s.effective_t2_s, precision);
        doc.set(p + "model_t2_s", s.model_t2_s, precision);
        doc.set(p + "override_used", s.override_used ? "true" : "false");
        doc.set(p + "amplitude_factor", s.amplitude_factor, precision);
    }
    for (std::size_t i = 0; i < r.notes.size(); ++i)
        doc.set("note" + std::to_string(i), "\"" + r.notes[i] + "\"");
    return doc;
}

inline std::string budget_csv(const BudgetReport& r, int precision = 9)
{
    std::string out = "index,phase,duration_s,effective_t2_s,model_t2_s,override_used,amplitude_factor\n";
    for (std::size_t i = 0; i < r.per_segment.size(); ++i) {
        const auto& s = r.per_segment[i];
        out += std::to_string(i) + "," + std::string(to_string(s.phase)) + ","
               + format_number(s.duration_s, precision) + ","
               + format_number(s.effective_t2_s, precision) + ","
               + format_number(s.model_t2_s, precision) + "," + (s.override_used ? "1" : "0")
               + "," + format_number(s.amplitude_factor, precision) + "\n";
    }
    return out;
}

} // namespace magictrap::io
