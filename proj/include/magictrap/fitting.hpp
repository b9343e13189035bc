#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dls_model.hpp"
#include "errors.hpp"

namespace magictrap {

struct DlsPoint {
    double depth_hz = 0.0; // signed, <= 0
    double dls_hz = 0.0;
    double sigma_hz = 1.0;
};

/// One measured shift-versus-depth curve at a fixed bias field.
struct DlsDataset {
    double b_field_gauss = 0.0;
    std::vector<DlsPoint> points;
};

struct TimeSample {
    double t_s = 0.0;
    double value = 0.0;
    double sigma = 1.0;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> values;
    Eigen::MatrixXd covariance;
    double chi_square = 0.0;
    std::size_t dof = 0;
    std::size_t iterations = 0;

    [[nodiscard]] std::size_t index(const std::string& name) const
    {
        const auto it = std::find(names.begin(), names.end(), name);
        detail::require(it != names.end(), ErrorCode::InvalidArgument,
                        "FitResult: unknown parameter '" + name + "'");
        return static_cast<std::size_t>(it - names.begin());
    }
    [[nodiscard]] double value(const std::string& name) const { return values[index(name)]; }
    [[nodiscard]] double std_error(const std::string& name) const
    {
        const auto i = static_cast<Eigen::Index>(index(name));
        return std::sqrt(std::max(0.0, covariance(i, i)));
    }
    [[nodiscard]] double reduced_chi_square() const
    {
        return dof > 0 ? chi_square / static_cast<double>(dof) : 0.0;
    }
};

struct DlsFitOptions {
    /// Fit beta1 together with beta2 and beta4 instead of holding it fixed.
    bool free_beta1 = false;
    /// Multiply the covariance by chi^2/dof (for data without real sigmas).
    bool scale_covariance = false;
    double max_condition = 1e12;
};

namespace detail {

inline void require_sigma(double sigma)
{
    require(std::isfinite(sigma) && sigma > 0, ErrorCode::InvalidArgument,
            "per-point sigma must be finite and > 0");
}

/// Weighted linear least squares on a column-scaled design. Rows of `design`
/// and `rhs` are already divided by sigma.
inline FitResult solve_weighted_linear(const Eigen::MatrixXd& design, const Eigen::VectorXd& rhs,
                                       std::vector<std::string> names, double max_condition)
{
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    Eigen::VectorXd scale = design.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < p; ++j)
        require(scale(j) > 0, ErrorCode::RankDeficient,
                "linear fit: parameter '" + names[static_cast<std::size_t>(j)]
                    + "' has an all-zero design column");
    const Eigen::MatrixXd scaled = design * scale.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd normal = scaled.transpose() * scaled;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    const double condition = lmin > 0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    if (!(condition <= max_condition)) {
        std::ostringstream msg;
        msg << "linear fit: normal matrix condition number " << condition
            << " exceeds limit " << max_condition;
        fail(ErrorCode::IllConditioned, msg.str());
    }

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    const Eigen::VectorXd scaled_solution = ldlt.solve(scaled.transpose() * rhs);
    const Eigen::MatrixXd scaled_cov = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

    FitResult out;
    out.names = std::move(names);
    const Eigen::VectorXd solution = scaled_solution.cwiseQuotient(scale);
    out.values.assign(solution.data(), solution.data() + p);
    out.covariance = scale.cwiseInverse().asDiagonal() * scaled_cov
                     * scale.cwiseInverse().asDiagonal();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    out.chi_square = (rhs - design * solution).squaredNorm();
    out.dof = static_cast<std::size_t>(n - p);
    return out;
}

} // namespace detail

/// Global fit of beta2 and beta4 (and optionally beta1) over curves taken at
/// several bias fields. The model is linear in the unknowns, so this is a
/// single weighted normal-equation solve.
inline FitResult fit_dls_global(const std::vector<DlsDataset>& datasets, double beta1_fixed,
                                const DlsFitOptions& opt = {})
{
    std::set<double> fields;
    std::set<double> depths;
    std::size_t total = 0;
    for (const auto& ds : datasets) {
        detail::require(std::isfinite(ds.b_field_gauss), ErrorCode::InvalidArgument,
                        "fit_dls_global: non-finite bias field");
        fields.insert(ds.b_field_gauss);
        for (const auto& pt : ds.points) {
            detail::require_trap_depth(pt.depth_hz, "fit_dls_global");
            detail::require(std::isfinite(pt.dls_hz), ErrorCode::InvalidArgument,
                            "fit_dls_global: non-finite shift");
            detail::require_sigma(pt.sigma_hz);
            depths.insert(pt.depth_hz);
            ++total;
        }
    }
    detail::require(fields.size() >= 2, ErrorCode::RankDeficient,
                    "fit_dls_global: need curves at >= 2 distinct bias fields");
    detail::require(depths.size() >= 2, ErrorCode::RankDeficient,
                    "fit_dls_global: need >= 2 distinct trap depths");
    const std::size_t params = opt.free_beta1 ? 3 : 2;
    detail::require(total >= params + 1, ErrorCode::RankDeficient,
                    "fit_dls_global: too few points for the number of parameters");
    detail::require(std::isfinite(beta1_fixed), ErrorCode::InvalidArgument,
                    "fit_dls_global: non-finite beta1");

    Eigen::MatrixXd design(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(params));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(total));
    Eigen::Index row = 0;
    for (const auto& ds : datasets) {
        for (const auto& pt : ds.points) {
            const double w = 1.0 / pt.sigma_hz;
            const double u = pt.depth_hz;
            design(row, 0) = w * ds.b_field_gauss * u;
            design(row, 1) = w * u * u;
            if (opt.free_beta1) {
                design(row, 2) = w * u;
                rhs(row) = w * pt.dls_hz;
            } else {
                rhs(row) = w * (pt.dls_hz - beta1_fixed * u);
            }
            ++row;
        }
    }
    std::vector<std::string> names{"beta2", "beta4"};
    if (opt.free_beta1)
        names.emplace_back("beta1");
    auto result = detail::solve_weighted_linear(design, rhs, std::move(names), opt.max_condition);
    if (opt.scale_covariance && result.dof > 0)
        result.covariance *= result.reduced_chi_square();
    return result;
}

/// First-order uncertainty of the magic depth from a (beta2, beta4) fit.
inline double magic_depth_uncertainty(const FitResult& fit, double beta1, double b_gauss)
{
    const double b2 = fit.value("beta2");
    const double b4 = fit.value("beta4");
    detail::require(b4 > 0, ErrorCode::NoMagicPoint, "magic_depth_uncertainty: beta4 <= 0");
    const auto i2 = static_cast<Eigen::Index>(fit.index("beta2"));
    const auto i4 = static_cast<Eigen::Index>(fit.index("beta4"));
    double b1 = beta1;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(fit.covariance.rows());
    if (std::find(fit.names.begin(), fit.names.end(), "beta1") != fit.names.end()) {
        b1 = fit.value("beta1");
        grad(static_cast<Eigen::Index>(fit.index("beta1"))) = -1.0 / (2 * b4);
    }
    grad(i2) = -b_gauss / (2 * b4);
    grad(i4) = (b1 + b2 * b_gauss) / (2 * b4 * b4);
    return std::sqrt(std::max(0.0, grad.dot(fit.covariance * grad)));
}

// ---------------------------------------------------------------------------
// Damped sinusoid
// ---------------------------------------------------------------------------

/// p(t) = offset + (V0/2) exp(-t/tau) cos(2 pi delta t + phi)
struct DampedSinusoid {
    double v0 = 1.0;
    double tau_s = 1.0;
    double delta_hz = 0.0;
    double phi = 0.0;
    double offset = 0.5;

    [[nodiscard]] double operator()(double t) const
    {
        return offset
               + 0.5 * v0 * std::exp(-t / tau_s)
                     * std::cos(2.0 * std::numbers::pi * delta_hz * t + phi);
    }
};

struct SinusoidFitOptions {
    std::size_t max_iterations = 200;
    double step_tolerance = 1e-10;
    bool scale_covariance = false;
};

namespace detail {

inline double wrap_phase(double phi)
{
    phi = std::remainder(phi, 2.0 * std::numbers::pi);
    return phi <= -std::numbers::pi ? phi + 2.0 * std::numbers::pi : phi;
}

/// Least-squares amplitude and phase of c + a cos(wt) + b sin(wt) over a range
/// of samples: returns (offset, amplitude, phi) with the fringe written as
/// amplitude * cos(wt + phi).
inline std::array<double, 3> harmonic_fit(const std::vector<TimeSample>& s, std::size_t begin,
                                          std::size_t end, double freq)
{
    Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (std::size_t i = begin; i < end; ++i) {
        const double w = 1.0 / (s[i].sigma * s[i].sigma);
        const double arg = 2.0 * std::numbers::pi * freq * s[i].t_s;
        const Eigen::Vector3d row(1.0, std::cos(arg), std::sin(arg));
        normal += w * row * row.transpose();
        rhs += w * s[i].value * row;
    }
    const Eigen::Vector3d x = normal.ldlt().solve(rhs);
    return {x(0), std::hypot(x(1), x(2)), std::atan2(-x(2), x(1))};
}

/// Peak of the weighted discrete spectrum of the mean-subtracted samples,
/// searched on an oversampled grid and refined by golden section.
inline double spectrum_peak(const std::vector<TimeSample>& s, double mean, double f_max,
                            double span)
{
    auto power = [&](double f) {
        std::complex<double> acc = 0.0;
        for (const auto& pt : s) {
            const double w = 1.0 / (pt.sigma * pt.sigma);
            acc += w * (pt.value - mean)
                   * std::polar(1.0, -2.0 * std::numbers::pi * f * pt.t_s);
        }
        return std::norm(acc);
    };
    const double step = 1.0 / (10.0 * span);
    const double f_min = 0.5 / span;
    double best_f = f_min;
    double best_p = -1.0;
    for (double f = f_min; f <= f_max; f += step) {
        const double p = power(f);
        if (p > best_p) {
            best_p = p;
            best_f = f;
        }
    }
    double lo = std::max(best_f - step, 0.0);
    double hi = std::min(best_f + step, f_max);
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - golden * (hi - lo);
    double x2 = lo + golden * (hi - lo);
    double p1 = power(x1);
    double p2 = power(x2);
    for (int i = 0; i < 80 && hi - lo > 1e-13 * hi; ++i) {
        if (p1 > p2) {
            hi = x2;
            x2 = x1;
            p2 = p1;
            x1 = hi - golden * (hi - lo);
            p1 = power(x1);
        } else {
            lo = x1;
            x1 = x2;
            p1 = p2;
            x2 = lo + golden * (hi - lo);
            p2 = power(x2);
        }
    }
    return 0.5 * (lo + hi);
}

inline DampedSinusoid initial_sinusoid(const std::vector<TimeSample>& s)
{
    const double span = s.back().t_s - s.front().t_s;
    require(span > 0, ErrorCode::FrequencyAmbiguity,
            "fit_damped_sinusoid: samples span zero time");
    std::vector<double> gaps;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i].t_s > s[i - 1].t_s)
            gaps.push_back(s[i].t_s - s[i - 1].t_s);
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2),
                     gaps.end());
    const double nyquist = 0.5 / gaps[gaps.size() / 2];

    double wsum = 0.0;
    double mean = 0.0;
    for (const auto& pt : s) {
        const double w = 1.0 / (pt.sigma * pt.sigma);
        wsum += w;
        mean += w * pt.value;
    }
    mean /= wsum;

    DampedSinusoid init;
    init.delta_hz = spectrum_peak(s, mean, nyquist, span);
    if (init.delta_hz * span < 1.0) {
        std::ostringstream msg;
        msg << "fit_damped_sinusoid: dominant frequency " << init.delta_hz
            << " Hz completes fewer than one period over the " << span << " s record";
        fail(ErrorCode::FrequencyAmbiguity, msg.str());
    }
    if (init.delta_hz > 0.98 * nyquist) {
        std::ostringstream msg;
        msg << "fit_damped_sinusoid: spectral peak at " << init.delta_hz
            << " Hz sits at the Nyquist limit " << nyquist << " Hz";
        fail(ErrorCode::FrequencyAmbiguity, msg.str());
    }

    const auto global = harmonic_fit(s, 0, s.size(), init.delta_hz);
    init.offset = global[0];
    init.phi = global[2];

    // Log-envelope regression of windowed fringe amplitudes.
    const auto periods = static_cast<std::size_t>(init.delta_hz * span);
    const std::size_t windows = std::min(periods, s.size() / 5);
    std::vector<double> wt;
    std::vector<double> wlog;
    if (windows >= 2) {
        for (std::size_t k = 0; k < windows; ++k) {
            const std::size_t b = k * s.size() / windows;
            const std::size_t e = (k + 1) * s.size() / windows;
            const auto h = harmonic_fit(s, b, e, init.delta_hz);
            if (h[1] <= 0)
                continue;
            double tm = 0.0;
            for (std::size_t i = b; i < e; ++i)
                tm += s[i].t_s;
            wt.push_back(tm / static_cast<double>(e - b));
            wlog.push_back(std::log(h[1]));
        }
    }
    double slope = 0.0;
    double intercept = std::log(std::max(global[1], 1e-6));
    if (wt.size() >= 2) {
        const double n = static_cast<double>(wt.size());
        double st = 0, sy = 0, stt = 0, sty = 0;
        for (std::size_t i = 0; i < wt.size(); ++i) {
            st += wt[i];
            sy += wlog[i];
            stt += wt[i] * wt[i];
            sty += wt[i] * wlog[i];
        }
        slope = (n * sty - st * sy) / (n * stt - st * st);
        intercept = (sy - slope * st) / n;
    }
    init.tau_s = slope < 0 ? -1.0 / slope : 10.0 * span;
    init.v0 = 2.0 * std::exp(intercept);
    // The windowed phase refers to t = 0 already, so keep the global estimate.
    return init;
}

inline double chi_square(const std::vector<TimeSample>& s, const DampedSinusoid& m)
{
    double acc = 0.0;
    for (const auto& pt : s) {
        const double r = (pt.value - m(pt.t_s)) / pt.sigma;
        acc += r * r;
    }
    return acc;
}

inline Eigen::Matrix<double, 5, 1> to_vector(const DampedSinusoid& m)
{
    Eigen::Matrix<double, 5, 1> v;
    v << m.v0, m.tau_s, m.delta_hz, m.phi, m.offset;
    return v;
}

inline DampedSinusoid from_vector(const Eigen::Matrix<double, 5, 1>& v)
{
    return {v(0), v(1), v(2), v(3), v(4)};
}

} // namespace detail

/// Nonlinear least squares of a damped sinusoid (Levenberg-Marquardt).
/// Initialized deterministically from the spectral peak and a log-envelope
/// regression; no random restarts.
inline FitResult fit_damped_sinusoid(std::vector<TimeSample> samples,
                                     const SinusoidFitOptions& opt = {})
{
    detail::require(samples.size() >= 10, ErrorCode::InvalidArgument,
                    "fit_damped_sinusoid: need >= 10 samples");
    for (const auto& pt : samples) {
        detail::require(std::isfinite(pt.t_s) && std::isfinite(pt.value),
                        ErrorCode::InvalidArgument, "fit_damped_sinusoid: non-finite sample");
        detail::require_sigma(pt.sigma);
    }
    std::stable_sort(samples.begin(), samples.end(),
                     [](const TimeSample& a, const TimeSample& b) { return a.t_s < b.t_s; });

    using Vec5 = Eigen::Matrix<double, 5, 1>;
    using Mat5 = Eigen::Matrix<double, 5, 5>;
    DampedSinusoid model = detail::initial_sinusoid(samples);
    double chi2 = detail::chi_square(samples, model);

    auto normal_system = [&](const DampedSinusoid& m, Mat5& jtj, Vec5& jtr) {
        jtj.setZero();
        jtr.setZero();
        for (const auto& pt : samples) {
            const double w = 1.0 / pt.sigma;
            const double decay = std::exp(-pt.t_s / m.tau_s);
            const double arg = 2.0 * std::numbers::pi * m.delta_hz * pt.t_s + m.phi;
            const double c = std::cos(arg);
            const double sn = std::sin(arg);
            Vec5 j;
            j(0) = 0.5 * decay * c;
            j(1) = 0.5 * m.v0 * decay * c * pt.t_s / (m.tau_s * m.tau_s);
            j(2) = -0.5 * m.v0 * decay * sn * 2.0 * std::numbers::pi * pt.t_s;
            j(3) = -0.5 * m.v0 * decay * sn;
            j(4) = 1.0;
            j *= w;
            const double r = w * (pt.value - m(pt.t_s));
            jtj += j * j.transpose();
            jtr += j * r;
        }
    };

    Mat5 jtj;
    Vec5 jtr;
    double lambda = 1e-3;
    bool converged = false;
    std::size_t iter = 0;
    for (; iter < opt.max_iterations && !converged; ++iter) {
        normal_system(model, jtj, jtr);
        bool accepted = false;
        while (!accepted) {
            Mat5 damped = jtj;
            for (int k = 0; k < 5; ++k)
                damped(k, k) += lambda * std::max(jtj(k, k), 1e-300);
            const Vec5 step = damped.ldlt().solve(jtr);
            const Vec5 current = detail::to_vector(model);
            const DampedSinusoid trial = detail::from_vector(current + step);
            const double trial_chi2 =
                trial.tau_s > 0 ? detail::chi_square(samples, trial)
                                : std::numeric_limits<double>::infinity();
            if (trial_chi2 <= chi2) {
                const Vec5 scale(std::abs(model.v0), model.tau_s, std::abs(model.delta_hz), 1.0,
                                 std::max(1.0, std::abs(model.offset)));
                const double rel = (step.cwiseAbs().array() / scale.array().max(1e-300)).maxCoeff();
                model = trial;
                chi2 = trial_chi2;
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                converged = rel < opt.step_tolerance;
            } else {
                lambda *= 10.0;
                if (lambda > 1e16) {
                    // No downhill step exists at machine precision: a minimum.
                    accepted = true;
                    converged = true;
                }
            }
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "fit_damped_sinusoid: no convergence after " << iter
            << " iterations (chi2 = " << chi2 << ", tau = " << model.tau_s
            << " s, delta = " << model.delta_hz << " Hz)";
        detail::fail(ErrorCode::FitFailure, msg.str());
    }

    // Canonical form: V0 >= 0, phi in (-pi, pi].
    if (model.v0 < 0) {
        model.v0 = -model.v0;
        model.phi += std::numbers::pi;
    }
    model.phi = detail::wrap_phase(model.phi);

    normal_system(model, jtj, jtr);
    FitResult out;
    out.names = {"V0", "tau", "delta", "phi", "offset"};
    out.values = {model.v0, model.tau_s, model.delta_hz, model.phi, model.offset};
    out.covariance = jtj.ldlt().solve(Mat5::Identity());
    out.chi_square = chi2;
    out.dof = samples.size() - 5;
    out.iterations = iter;
    if (opt.scale_covariance && out.dof > 0)
        out.covariance *= out.reduced_chi_square();
    return out;
}

/// Fits v(t) = exp(-t/tau) by zero-intercept regression of log v on t, with
/// weights (v/sigma)^2 from propagating sigma through the logarithm.
inline FitResult fit_envelope(const std::vector<TimeSample>& samples)
{
    detail::require(samples.size() >= 4, ErrorCode::InvalidArgument,
                    "fit_envelope: need >= 4 samples");
    double stt = 0.0;
    double sty = 0.0;
    for (const auto& pt : samples) {
        detail::require(std::isfinite(pt.value) && pt.value > 0, ErrorCode::InvalidArgument,
                        "fit_envelope: visibilities must be > 0");
        detail::require(std::isfinite(pt.t_s), ErrorCode::InvalidArgument,
                        "fit_envelope: non-finite time");
        detail::require_sigma(pt.sigma);
        const double w = (pt.value / pt.sigma) * (pt.value / pt.sigma);
        stt += w * pt.t_s * pt.t_s;
        sty += w * pt.t_s * std::log(pt.value);
    }
    detail::require(stt > 0, ErrorCode::InvalidArgument,
                    "fit_envelope: need samples at non-zero time");
    const double slope = sty / stt;
    detail::require(slope < 0, ErrorCode::FitFailure,
                    "fit_envelope: visibility does not decay");
    double chi2 = 0.0;
    for (const auto& pt : samples) {
        const double w = (pt.value / pt.sigma) * (pt.value / pt.sigma);
        const double r = std::log(pt.value) - slope * pt.t_s;
        chi2 += w * r * r;
    }
    const double tau = -1.0 / slope;
    const double slope_var = 1.0 / stt;
    FitResult out;
    out.names = {"tau"};
    out.values = {tau};
    out.covariance = Eigen::MatrixXd::Constant(1, 1, slope_var * tau * tau * tau * tau);
    out.chi_square = chi2;
    out.dof = samples.size() - 1;
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Model curve plus i.i.d. gaussian noise. Point sigmas are noise_sigma, or 1
/// when noiseless.
inline DlsDataset synth_dls(const TrapCoefficients& c, double b_gauss,
                            const std::vector<double>& depths_hz, double noise_sigma_hz,
                            std::uint64_t seed)
{
    detail::require(std::isfinite(noise_sigma_hz) && noise_sigma_hz >= 0,
                    ErrorCode::InvalidArgument, "synth_dls: noise sigma must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    DlsDataset ds{b_gauss, {}};
    ds.points.reserve(depths_hz.size());
    for (double u : depths_hz) {
        const double clean = dls(c, b_gauss, u);
        const double eps = noise_sigma_hz > 0 ? noise_sigma_hz * noise(rng) : 0.0;
        ds.points.push_back({u, clean + eps, noise_sigma_hz > 0 ? noise_sigma_hz : 1.0});
    }
    return ds;
}

/// Damped-sinusoid samples with gaussian noise of the given sigma.
inline std::vector<TimeSample> synth_ramsey(const DampedSinusoid& model,
                                            const std::vector<double>& times,
                                            double noise_sigma, std::uint64_t seed)
{
    detail::require(std::isfinite(noise_sigma) && noise_sigma >= 0, ErrorCode::InvalidArgument,
                    "synth_ramsey: noise sigma must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<TimeSample> out;
    out.reserve(times.size());
    for (double t : times) {
        const double eps = noise_sigma > 0 ? noise_sigma * noise(rng) : 0.0;
        out.push_back({t, model(t) + eps, noise_sigma > 0 ? noise_sigma : 1.0});
    }
    return out;
}

} // namespace magictrap
