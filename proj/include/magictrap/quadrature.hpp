#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <queue>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace magictrap::quad {

struct Options {
    double rel_tol = 1e-8;
    double abs_tol = 1e-12;
    std::size_t max_intervals = 20000;
};

template <class Value>
struct Result {
    Value value{};
    double error = 0.0;
    std::size_t evaluations = 0;
    std::size_t intervals = 0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kronrod_nodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_weights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_weights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

template <class Value>
struct Segment {
    double a;
    double b;
    Value value;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

template <class Value, class F>
Segment<Value> kronrod15(F& f, double a, double b)
{
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const Value fc = f(center);
    Value kronrod = fc * kronrod_weights[7];
    Value gauss = fc * gauss_weights[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kronrod_nodes[j];
        const Value sum = f(center - dx) + f(center + dx);
        kronrod += sum * kronrod_weights[j];
        if (j % 2 == 1)
            gauss += sum * gauss_weights[j / 2];
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, magnitude(kronrod - gauss)};
}

} // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [a, b]. The interval
/// with the largest error estimate is bisected until the summed estimate
/// falls below max(abs_tol, rel_tol |I|). `initial_pieces` pre-splits the
/// domain, which helps strongly oscillatory integrands.
template <class Value, class F>
Result<Value> integrate(F&& f, double a, double b, const Options& opt = {},
                        std::size_t initial_pieces = 1)
{
    magictrap::detail::require(std::isfinite(a) && std::isfinite(b) && b >= a,
                               ErrorCode::InvalidArgument,
                               "integrate: bounds must be finite with b >= a");
    Result<Value> out;
    if (b == a)
        return out;
    if (initial_pieces == 0)
        initial_pieces = 1;

    std::priority_queue<detail::Segment<Value>> heap;
    Value total{};
    double total_error = 0.0;
    const double width = (b - a) / static_cast<double>(initial_pieces);
    for (std::size_t i = 0; i < initial_pieces; ++i) {
        const double lo = a + width * static_cast<double>(i);
        const double hi = (i + 1 == initial_pieces) ? b : lo + width;
        auto seg = detail::kronrod15<Value>(f, lo, hi);
        total += seg.value;
        total_error += seg.error;
        heap.push(seg);
    }
    out.evaluations = 15 * initial_pieces;

    auto converged = [&] {
        return total_error <= std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(total));
    };
    while (!converged()) {
        if (heap.size() >= opt.max_intervals) {
            std::ostringstream msg;
            msg << "integrate: no convergence on [" << a << ", " << b << "] after "
                << heap.size() << " intervals (error estimate " << total_error
                << ", value magnitude " << detail::magnitude(total) << ")";
            magictrap::detail::fail(ErrorCode::NumericalFailure, msg.str());
        }
        const auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            magictrap::detail::fail(ErrorCode::NumericalFailure,
                                    "integrate: interval cannot be subdivided further");
        }
        auto left = detail::kronrod15<Value>(f, worst.a, mid);
        auto right = detail::kronrod15<Value>(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Resum to drop the round-off accumulated by the running updates.
    total = Value{};
    total_error = 0.0;
    out.intervals = heap.size();
    while (!heap.empty()) {
        total += heap.top().value;
        total_error += heap.top().error;
        heap.pop();
    }
    out.value = total;
    out.error = total_error;
    return out;
}

} // namespace magictrap::quad
