#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acceptance.hpp"
#include "constants.hpp"
#include "dls_model.hpp"
#include "errors.hpp"
#include "fitting.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "ramsey.hpp"
#include "svg_plot.hpp"
#include "transfer.hpp"

namespace magictrap::cli {

inline constexpr const char* version = "1.0.0";

namespace detail {

struct Common {
    std::string coeffs_file;
    std::string preset = "experimental";
    int precision = 9;
    std::string out_csv;
    std::string plot_svg;
    bool no_renormalize = false;
};

inline TrapCoefficients coefficients(const Common& c)
{
    if (!c.coeffs_file.empty())
        return io::read_coefficients(c.coeffs_file);
    if (c.preset == "theory")
        return presets::theory;
    if (c.preset == "linear")
        return presets::linear;
    return presets::experimental;
}

inline void add_coeffs(CLI::App* sub, Common& c)
{
    auto* file = sub->add_option("--coeffs", c.coeffs_file, "coefficient file (key = value)");
    sub->add_option("--preset", c.preset, "built-in coefficient set")
        ->check(CLI::IsMember({"experimental", "theory", "linear"}))
        ->excludes(file);
}

inline void add_output(CLI::App* sub, Common& c, bool table, bool plot)
{
    sub->add_option("--precision", c.precision, "significant digits")->check(CLI::Range(1, 17));
    if (table)
        sub->add_option("--out", c.out_csv, "write the table as CSV");
    if (plot)
        sub->add_option("--plot", c.plot_svg, "write an SVG plot");
}

inline std::vector<double> linspace(double a, double b, std::size_t n)
{
    magictrap::detail::require(n >= 2, ErrorCode::InvalidArgument, "need at least 2 points");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

inline std::string table_csv(const std::vector<std::string>& header,
                             const std::vector<std::vector<double>>& columns, int precision)
{
    io::CsvTable t{header, {}};
    for (std::size_t i = 0; i < columns.front().size(); ++i) {
        std::vector<double> row;
        for (const auto& c : columns)
            row.push_back(c[i]);
        t.rows.push_back(std::move(row));
    }
    return io::to_csv(t, precision);
}

// Trap configuration shared by ramsey, visibility, t2star.
struct TrapArgs {
    double temp_uk = 0.0;
    std::optional<double> depth_mk;
    double b_field = 0.0;
    double detuning_hz = 0.0;
};

inline void add_trap(CLI::App* sub, TrapArgs& t)
{
    sub->add_option("--temp-uk", t.temp_uk, "temperature in uK")
        ->required()
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--depth-mk", t.depth_mk, "mean trap depth in mK (default: magic depth)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--b-field", t.b_field, "bias field in G")->required();
    sub->add_option("--detuning-hz", t.detuning_hz, "microwave detuning in Hz");
}

inline TrapFieldConfig trap_config(const TrapArgs& t, const TrapCoefficients& c)
{
    TrapFieldConfig cfg;
    cfg.coeffs = c;
    cfg.b_field_gauss = t.b_field;
    cfg.mean_depth_hz = t.depth_mk ? depth_hz_from_mk(*t.depth_mk) : magic_depth(c, t.b_field);
    cfg.temperature_k = t.temp_uk * 1e-6;
    cfg.detuning_hz = t.detuning_hz;
    validate(cfg);
    return cfg;
}

inline void describe(io::KeyValueDocument& doc, const TrapFieldConfig& cfg, int p)
{
    doc.set("depth_mk", depth_mk_from_hz(cfg.mean_depth_hz), p);
    doc.set("temperature_uk", cfg.temperature_k * 1e6, p);
    doc.set("b_field_gauss", cfg.b_field_gauss, p);
    doc.set("detuning_hz", cfg.detuning_hz, p);
}

inline void maybe_write(const std::string& path, const std::string& contents)
{
    if (!path.empty())
        io::write_file(path, contents);
}

} // namespace detail

/// Parses argv and runs the selected subcommand. Exit codes: 0 success,
/// 1 domain or runtime error, 2 usage error.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    using detail::Common;
    CLI::App app{"magic-intensity trap light-shift and Ramsey coherence toolkit", "magictrap"};
    app.require_subcommand(0, 1);
    bool show_version = false;
    bool show_constants = false;
    app.add_flag("--version", show_version, "print the version");
    app.add_flag("--constants", show_constants, "with --version: print the physical constants");

    std::vector<std::function<void()>> actions;
    auto bind = [&](CLI::App* sub, std::function<void()> fn) {
        sub->callback([&actions, fn = std::move(fn)] { actions.push_back(fn); });
    };

    // dls-curve --------------------------------------------------------------
    Common dc;
    std::vector<double> dc_fields;
    double dc_min = 0.02, dc_max = 0.6, dc_noise = 0.0;
    std::size_t dc_points = 60;
    std::uint64_t dc_seed = 1;
    auto* s_dls = app.add_subcommand("dls-curve", "differential light shift versus trap depth");
    s_dls->add_option("--b-field", dc_fields, "bias field(s) in G")->required();
    s_dls->add_option("--depth-min-mk", dc_min)->check(CLI::PositiveNumber);
    s_dls->add_option("--depth-max-mk", dc_max)->check(CLI::PositiveNumber);
    s_dls->add_option("--points", dc_points)->check(CLI::Range(2, 1000000));
    s_dls->add_option("--noise-hz", dc_noise, "add gaussian noise (writes sigma_hz)")
        ->check(CLI::NonNegativeNumber);
    s_dls->add_option("--seed", dc_seed);
    detail::add_coeffs(s_dls, dc);
    detail::add_output(s_dls, dc, true, true);
    bind(s_dls, [&] {
        const auto c = detail::coefficients(dc);
        std::vector<double> depths_hz;
        for (double mk : detail::linspace(dc_min, dc_max, dc_points))
            depths_hz.push_back(depth_hz_from_mk(mk));
        std::vector<DlsDataset> sets;
        svg::Plot plot{"Differential light shift", "trap depth (mK)", "DLS (Hz)", {}};
        io::KeyValueDocument doc;
        for (std::size_t k = 0; k < dc_fields.size(); ++k) {
            sets.push_back(synth_dls(c, dc_fields[k], depths_hz, dc_noise, dc_seed + k));
            svg::Series s{"B = " + io::format_number(dc_fields[k], 4) + " G", {}, {},
                          dc_noise > 0 ? svg::Style::Markers : svg::Style::Line};
            double lo = std::numeric_limits<double>::infinity();
            for (const auto& p : sets.back().points) {
                s.x.push_back(depth_mk_from_hz(p.depth_hz));
                s.y.push_back(p.dls_hz);
                lo = std::min(lo, p.dls_hz);
            }
            plot.series.push_back(std::move(s));
            const std::string tag = "field" + std::to_string(k) + "_";
            doc.set(tag + "b_field_gauss", dc_fields[k], dc.precision);
            doc.set(tag + "min_dls_hz", lo, dc.precision);
        }
        doc.set("points", std::to_string(sets.size() * depths_hz.size()));
        out << doc.str();
        auto table = io::dls_datasets_to_csv(sets);
        detail::maybe_write(dc.out_csv, io::to_csv(table, dc.precision));
        detail::maybe_write(dc.plot_svg, svg::render(plot));
    });

    // magic ------------------------------------------------------------------
    Common mg;
    double mg_field = 0.0;
    auto* s_magic = app.add_subcommand("magic", "magic depth, vertex shift and zero-crossing field");
    s_magic->add_option("--b-field", mg_field, "bias field in G")->required();
    detail::add_coeffs(s_magic, mg);
    detail::add_output(s_magic, mg, false, false);
    bind(s_magic, [&] {
        const auto c = detail::coefficients(mg);
        const double u = magic_depth(c, mg_field);
        io::KeyValueDocument doc;
        doc.set("u_m_hz", u, mg.precision);
        doc.set("depth_mk", depth_mk_from_hz(u), mg.precision);
        doc.set("dls_min_hz", dls_minimum(c, mg_field), mg.precision);
        if (c.beta2 != 0.0)
            doc.set("zero_crossing_gauss", zero_crossing_field(c), mg.precision);
        else
            doc.set("zero_crossing_gauss", "none");
        out << doc.str();
    });

    // beff -------------------------------------------------------------------
    Common bf;
    double bf_ratio = presets::vector_ratio_830nm, bf_depth = 0.0;
    auto* s_beff = app.add_subcommand("beff", "effective magnetic field of the vector light shift");
    s_beff->add_option("--ratio", bf_ratio, "vector-to-scalar polarizability ratio");
    s_beff->add_option("--depth-mk", bf_depth, "trap depth in mK")
        ->required()
        ->check(CLI::PositiveNumber);
    detail::add_output(s_beff, bf, false, false);
    bind(s_beff, [&] {
        const double u = depth_hz_from_mk(bf_depth);
        io::KeyValueDocument doc;
        doc.set("depth_hz", u, bf.precision);
        doc.set("b_eff_gauss", effective_field(bf_ratio, u), bf.precision);
        out << doc.str();
    });

    // fit-dls ----------------------------------------------------------------
    Common fd;
    std::string fd_input;
    std::optional<double> fd_beta1, fd_field;
    bool fd_free = false, fd_scale = false;
    auto* s_fitdls = app.add_subcommand("fit-dls", "global fit of beta2, beta4 to DLS data");
    s_fitdls->add_option("--input", fd_input, "CSV: b_field_gauss,depth_mk,dls_hz[,sigma_hz]")
        ->required();
    s_fitdls->add_option("--beta1", fd_beta1, "fixed beta1 (default: from coefficients)");
    s_fitdls->add_flag("--free-beta1", fd_free, "fit beta1 as well");
    s_fitdls->add_flag("--scale-covariance", fd_scale, "scale covariance by reduced chi^2");
    s_fitdls->add_option("--b-field", fd_field, "also report the magic depth at this field");
    detail::add_coeffs(s_fitdls, fd);
    detail::add_output(s_fitdls, fd, false, true);
    bind(s_fitdls, [&] {
        bool had_sigma = false;
        const auto sets = io::dls_datasets_from_csv(io::read_csv(fd_input), &had_sigma);
        const double beta1 = fd_beta1 ? *fd_beta1 : detail::coefficients(fd).beta1;
        DlsFitOptions opt;
        opt.free_beta1 = fd_free;
        opt.scale_covariance = fd_scale || !had_sigma;
        const auto fit = fit_dls_global(sets, beta1, opt);
        auto doc = io::to_document(fit, fd.precision);
        const double b1 = fd_free ? fit.value("beta1") : beta1;
        TrapCoefficients c{b1, fit.value("beta2"), fit.value("beta4"), 1.0};
        if (fd_field && c.beta4 > 0) {
            const double u = magic_depth(c, *fd_field);
            doc.set("magic_depth_hz", u, fd.precision);
            doc.set("magic_depth_mk", depth_mk_from_hz(u), fd.precision);
            doc.set("magic_depth_stderr_hz", magic_depth_uncertainty(fit, b1, *fd_field),
                    fd.precision);
        }
        out << doc.str();
        if (!fd.plot_svg.empty()) {
            svg::Plot plot{"DLS fit", "trap depth (mK)", "DLS (Hz)", {}};
            for (const auto& ds : sets) {
                const std::string b = io::format_number(ds.b_field_gauss, 4);
                svg::Series data{"data " + b + " G", {}, {}, svg::Style::Markers};
                double dmax = 0;
                for (const auto& p : ds.points) {
                    data.x.push_back(depth_mk_from_hz(p.depth_hz));
                    data.y.push_back(p.dls_hz);
                    dmax = std::max(dmax, data.x.back());
                }
                svg::Series model{"fit " + b + " G", {}, {}, svg::Style::Line};
                for (double mk : detail::linspace(0.0, dmax, 100)) {
                    model.x.push_back(mk);
                    model.y.push_back(dls(c, ds.b_field_gauss, depth_hz_from_mk(mk)));
                }
                plot.series.push_back(std::move(data));
                plot.series.push_back(std::move(model));
            }
            io::write_file(fd.plot_svg, svg::render(plot));
        }
    });

    // ramsey / visibility ----------------------------------------------------
    Common rs;
    detail::TrapArgs rs_trap;
    double rs_tmax = 3.0, rs_noise = 0.0;
    std::size_t rs_points = 301;
    std::uint64_t rs_seed = 1;
    auto* s_ramsey = app.add_subcommand("ramsey", "thermally averaged Ramsey fringe");
    detail::add_trap(s_ramsey, rs_trap);
    s_ramsey->add_option("--t-max-s", rs_tmax)->check(CLI::PositiveNumber);
    s_ramsey->add_option("--points", rs_points)->check(CLI::Range(2, 1000000));
    s_ramsey->add_option("--noise", rs_noise, "add gaussian noise (writes sigma)")
        ->check(CLI::NonNegativeNumber);
    s_ramsey->add_option("--seed", rs_seed);
    s_ramsey->add_flag("--no-renormalize", rs.no_renormalize, "use the truncated density as is");
    detail::add_coeffs(s_ramsey, rs);
    detail::add_output(s_ramsey, rs, true, true);
    bind(s_ramsey, [&] {
        const auto cfg = detail::trap_config(rs_trap, detail::coefficients(rs));
        RamseyOptions opt;
        opt.renormalize = !rs.no_renormalize;
        const auto trace = ramsey_trace(cfg, detail::linspace(0.0, rs_tmax, rs_points), opt);
        std::vector<double> p = trace.population;
        std::vector<double> sigma(p.size(), rs_noise);
        if (rs_noise > 0) {
            std::mt19937_64 rng(rs_seed);
            std::normal_distribution<double> n(0.0, rs_noise);
            for (auto& v : p)
                v += n(rng);
        }
        io::KeyValueDocument doc;
        detail::describe(doc, cfg, rs.precision);
        doc.set("points", std::to_string(p.size()));
        doc.set("population_final", trace.population.back(), rs.precision);
        out << doc.str();
        if (rs_noise > 0)
            detail::maybe_write(rs.out_csv, detail::table_csv({"t_s", "p", "sigma"},
                                                              {trace.times, p, sigma}, rs.precision));
        else
            detail::maybe_write(rs.out_csv, detail::table_csv({"t_s", "population"},
                                                              {trace.times, p}, rs.precision));
        detail::maybe_write(rs.plot_svg,
                            svg::render({"Ramsey signal", "t (s)", "population",
                                         {{"model", trace.times, p,
                                           rs_noise > 0 ? svg::Style::Markers : svg::Style::Line}}}));
    });

    Common vs;
    detail::TrapArgs vs_trap;
    double vs_tmax = 3.0;
    std::size_t vs_points = 301;
    auto* s_vis = app.add_subcommand("visibility", "Ramsey fringe visibility versus time");
    detail::add_trap(s_vis, vs_trap);
    s_vis->add_option("--t-max-s", vs_tmax)->check(CLI::PositiveNumber);
    s_vis->add_option("--points", vs_points)->check(CLI::Range(2, 1000000));
    s_vis->add_flag("--no-renormalize", vs.no_renormalize, "use the truncated density as is");
    detail::add_coeffs(s_vis, vs);
    detail::add_output(s_vis, vs, true, true);
    bind(s_vis, [&] {
        const auto cfg = detail::trap_config(vs_trap, detail::coefficients(vs));
        RamseyOptions opt;
        opt.renormalize = !vs.no_renormalize;
        const auto curve = visibility_curve(cfg, detail::linspace(0.0, vs_tmax, vs_points), opt);
        io::KeyValueDocument doc;
        detail::describe(doc, cfg, vs.precision);
        doc.set("points", std::to_string(curve.times.size()));
        doc.set("visibility_final", curve.visibility.back(), vs.precision);
        out << doc.str();
        detail::maybe_write(vs.out_csv, detail::table_csv({"t_s", "visibility"},
                                                          {curve.times, curve.visibility},
                                                          vs.precision));
        detail::maybe_write(vs.plot_svg,
                            svg::render({"Fringe visibility", "t (s)", "visibility",
                                         {{"model", curve.times, curve.visibility, svg::Style::Line}}}));
    });

    // t2star -----------------------------------------------------------------
    Common ts;
    detail::TrapArgs ts_trap;
    std::optional<double> ts_t1, ts_t2p;
    auto* s_t2 = app.add_subcommand("t2star", "inhomogeneous dephasing time");
    detail::add_trap(s_t2, ts_trap);
    auto* o_t1 = s_t2->add_option("--t1-s", ts_t1, "T1 for the combined tau")->check(CLI::PositiveNumber);
    auto* o_t2p = s_t2->add_option("--t2prime-s", ts_t2p, "T2' for the combined tau")
                      ->check(CLI::PositiveNumber);
    o_t1->needs(o_t2p);
    o_t2p->needs(o_t1);
    s_t2->add_flag("--no-renormalize", ts.no_renormalize, "use the truncated density as is");
    detail::add_coeffs(s_t2, ts);
    detail::add_output(s_t2, ts, false, false);
    bind(s_t2, [&] {
        const auto cfg = detail::trap_config(ts_trap, detail::coefficients(ts));
        RamseyOptions opt;
        opt.renormalize = !ts.no_renormalize;
        const double t2 = t2_star(cfg, opt);
        io::KeyValueDocument doc;
        detail::describe(doc, cfg, ts.precision);
        doc.set("t2_star_s", t2, ts.precision);
        if (ts_t1)
            doc.set("tau_s", combine_coherence(*ts_t1, *ts_t2p, t2), ts.precision);
        out << doc.str();
    });

    // coherence-curve --------------------------------------------------------
    Common cc;
    double cc_temp = 0.0, cc_field = 0.0, cc_t1 = 4.0, cc_t2p = 0.3;
    double cc_rmin = 0.5, cc_rmax = 1.5, cc_step = 0.05;
    auto* s_cc = app.add_subcommand("coherence-curve", "coherence time versus U_a/U_M");
    s_cc->add_option("--temp-uk", cc_temp, "temperature in uK")->required()->check(CLI::PositiveNumber);
    s_cc->add_option("--b-field", cc_field, "bias field in G")->required();
    s_cc->add_option("--t1-s", cc_t1)->check(CLI::PositiveNumber);
    s_cc->add_option("--t2prime-s", cc_t2p)->check(CLI::PositiveNumber);
    s_cc->add_option("--ratio-min", cc_rmin)->check(CLI::PositiveNumber);
    s_cc->add_option("--ratio-max", cc_rmax)->check(CLI::PositiveNumber);
    s_cc->add_option("--ratio-step", cc_step)->check(CLI::PositiveNumber);
    s_cc->add_flag("--no-renormalize", cc.no_renormalize, "use the truncated density as is");
    detail::add_coeffs(s_cc, cc);
    detail::add_output(s_cc, cc, true, true);
    bind(s_cc, [&] {
        magictrap::detail::require(cc_rmax >= cc_rmin, ErrorCode::InvalidArgument,
                                   "coherence-curve: ratio-max < ratio-min");
        std::vector<double> ratios;
        const auto n = static_cast<std::size_t>(std::floor((cc_rmax - cc_rmin) / cc_step + 1e-9));
        for (std::size_t i = 0; i <= n; ++i)
            ratios.push_back(cc_rmin + cc_step * static_cast<double>(i));
        TrapFieldConfig base;
        base.coeffs = detail::coefficients(cc);
        base.b_field_gauss = cc_field;
        base.temperature_k = cc_temp * 1e-6;
        RamseyOptions opt;
        opt.renormalize = !cc.no_renormalize;
        const auto curve = coherence_vs_depth(base, ratios, cc_t1, cc_t2p, opt, default_thread_count());
        std::size_t best = 0;
        std::vector<double> x, tau;
        for (std::size_t i = 0; i < curve.size(); ++i) {
            if (curve[i].tau_s > curve[best].tau_s)
                best = i;
            x.push_back(curve[i].ratio);
            tau.push_back(curve[i].tau_s);
        }
        io::KeyValueDocument doc;
        doc.set("u_m_hz", magic_depth(base.coeffs, cc_field), cc.precision);
        doc.set("points", std::to_string(curve.size()));
        doc.set("best_ratio", curve[best].ratio, cc.precision);
        doc.set("best_tau_s", curve[best].tau_s, cc.precision);
        out << doc.str();
        detail::maybe_write(cc.out_csv, detail::table_csv({"ratio", "tau_s"}, {x, tau}, cc.precision));
        std::vector<double> tau_ms;
        for (double v : tau)
            tau_ms.push_back(v * 1e3);
        detail::maybe_write(cc.plot_svg,
                            svg::render({"Coherence time", "U_a / U_M", "tau (ms)",
                                         {{"model", x, tau_ms, svg::Style::Line}}}));
    });

    // fit-ramsey -------------------------------------------------------------
    Common fr;
    std::string fr_input, fr_model = "damped";
    std::optional<std::string> fr_column;
    bool fr_scale = false;
    auto* s_fr = app.add_subcommand("fit-ramsey", "fit a damped sinusoid or a visibility envelope");
    s_fr->add_option("--input", fr_input, "CSV: t_s,p[,sigma] or t_s,visibility[,sigma]")->required();
    s_fr->add_option("--model", fr_model)->check(CLI::IsMember({"damped", "envelope"}));
    s_fr->add_option("--column", fr_column, "value column (default p or visibility)");
    s_fr->add_flag("--scale-covariance", fr_scale, "scale covariance by reduced chi^2");
    detail::add_output(s_fr, fr, false, true);
    bind(s_fr, [&] {
        const bool damped = fr_model == "damped";
        bool had_sigma = false;
        const auto samples = io::time_samples_from_csv(
            io::read_csv(fr_input), fr_column.value_or(damped ? "p" : "visibility"), &had_sigma);
        FitResult fit;
        std::function<double(double)> model;
        if (damped) {
            SinusoidFitOptions opt;
            opt.scale_covariance = fr_scale || !had_sigma;
            fit = fit_damped_sinusoid(samples, opt);
            DampedSinusoid m{fit.value("V0"), fit.value("tau"), fit.value("delta"), fit.value("phi"),
                             fit.value("offset")};
            model = m;
        } else {
            fit = fit_envelope(samples);
            const double tau = fit.value("tau");
            model = [tau](double t) { return std::exp(-t / tau); };
        }
        out << io::to_document(fit, fr.precision).str();
        if (!fr.plot_svg.empty()) {
            svg::Series data{"data", {}, {}, svg::Style::Markers};
            double t0 = samples.front().t_s, t1 = t0;
            for (const auto& s : samples) {
                data.x.push_back(s.t_s);
                data.y.push_back(s.value);
                t0 = std::min(t0, s.t_s);
                t1 = std::max(t1, s.t_s);
            }
            svg::Series line{"fit", {}, {}, svg::Style::Line};
            for (double t : detail::linspace(t0, t1, 400)) {
                line.x.push_back(t);
                line.y.push_back(model(t));
            }
            io::write_file(fr.plot_svg,
                           svg::render({"Ramsey fit", "t (s)", damped ? "population" : "visibility",
                                        {data, line}}));
        }
    });

    // transfer ---------------------------------------------------------------
    Common tr;
    std::string tr_input;
    std::optional<double> tr_post;
    auto* s_tr = app.add_subcommand("transfer", "coherence budget of a qubit transfer timeline");
    s_tr->add_option("--input", tr_input, "timeline JSON")->required();
    s_tr->add_option("--post-temp-uk", tr_post, "temperature after the transfer in uK")
        ->check(CLI::PositiveNumber);
    s_tr->add_flag("--no-renormalize", tr.no_renormalize, "use the truncated density as is");
    detail::add_coeffs(s_tr, tr);
    detail::add_output(s_tr, tr, true, false);
    bind(s_tr, [&] {
        std::optional<TrapCoefficients> c;
        if (!tr.coeffs_file.empty() || s_tr->count("--preset") > 0)
            c = detail::coefficients(tr);
        const auto doc_in = io::parse_timeline(io::read_file(tr_input), c);
        const auto post = tr_post ? std::optional<double>(*tr_post * 1e-6)
                                  : doc_in.post_transfer_temperature_k;
        magictrap::detail::require(post.has_value(), ErrorCode::InvalidArgument,
                                   "transfer: no post-transfer temperature (document or --post-temp-uk)");
        RamseyOptions opt;
        opt.renormalize = !tr.no_renormalize;
        const auto report = coherence_budget(doc_in.timeline, *post, opt, default_thread_count());
        out << io::to_document(report, tr.precision).str();
        detail::maybe_write(tr.out_csv, io::budget_csv(report, tr.precision));
    });

    // convert ----------------------------------------------------------------
    Common cv;
    std::optional<double> cv_mk, cv_hz, cv_uk;
    std::string cv_write;
    auto* s_cv = app.add_subcommand("convert", "unit conversions and coefficient files");
    s_cv->add_option("--depth-mk", cv_mk, "trap depth in mK to Hz")->check(CLI::NonNegativeNumber);
    s_cv->add_option("--depth-hz", cv_hz, "signed depth in Hz to mK");
    s_cv->add_option("--temp-uk", cv_uk, "temperature in uK to kT/h")->check(CLI::PositiveNumber);
    s_cv->add_option("--write-coeffs", cv_write, "write the selected coefficients to a file");
    detail::add_coeffs(s_cv, cv);
    detail::add_output(s_cv, cv, false, false);
    bind(s_cv, [&] {
        magictrap::detail::require(cv_mk || cv_hz || cv_uk || !cv_write.empty(),
                                   ErrorCode::InvalidArgument, "convert: nothing to convert");
        io::KeyValueDocument doc;
        if (cv_mk)
            doc.set("depth_hz", depth_hz_from_mk(*cv_mk), cv.precision);
        if (cv_hz) {
            magictrap::detail::require(*cv_hz <= 0, ErrorCode::ConventionViolation,
                                       "convert: depths are stored as negative light shifts");
            doc.set("depth_mk", depth_mk_from_hz(*cv_hz), cv.precision);
        }
        if (cv_uk)
            doc.set("thermal_energy_hz", thermal_energy_hz(*cv_uk * 1e-6), cv.precision);
        if (!cv_write.empty()) {
            const auto c = detail::coefficients(cv);
            io::write_file(cv_write, io::to_document(c, 17).str());
            doc.set("written", cv_write);
        }
        out << doc.str();
    });

    // selftest ---------------------------------------------------------------
    acceptance::Options st_opt;
    auto* s_st = app.add_subcommand("selftest", "run the acceptance suite");
    s_st->add_option("--seed", st_opt.seed);
    int selftest_status = 0;
    bind(s_st, [&] {
        const auto results = acceptance::run_all(st_opt);
        int failed = 0;
        for (const auto& r : results) {
            out << acceptance::format_line(r) << "\n";
            failed += r.passed ? 0 : 1;
        }
        out << (results.size() - static_cast<std::size_t>(failed)) << "/" << results.size()
            << " criteria passed\n";
        selftest_status = failed == 0 ? 0 : 1;
    });

    try {
        app.parse(argc, argv);
        if (show_constants && !show_version)
            throw CLI::ValidationError("--constants", "requires --version");
        if (show_version) {
            out << "magictrap " << version << "\n";
            if (show_constants) {
                io::KeyValueDocument doc;
                doc.set("planck_h", PhysicalConstants::planck_h, 10);
                doc.set("boltzmann_kB", PhysicalConstants::boltzmann_kB, 10);
                doc.set("bohr_magneton_over_h", PhysicalConstants::bohr_magneton_over_h, 10);
                doc.set("rb87_hyperfine_nu0", PhysicalConstants::rb87_hyperfine_nu0, 10);
                out << doc.str();
            }
            return 0;
        }
        if (app.get_subcommands().empty())
            throw CLI::RequiredError("a subcommand");
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        for (auto& a : actions)
            a();
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return selftest_status;
}

} // namespace magictrap::cli
