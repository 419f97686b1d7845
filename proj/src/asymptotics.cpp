#include "escape/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace escape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Integer window [ceil(lo), floor(hi)] clipped to [1, cap]; nullopt when it
/// holds fewer than kMinWindowPoints indices.
std::optional<std::pair<std::size_t, std::size_t>> window(double lo, double hi, std::size_t cap) {
    const double first = std::max(1.0, std::ceil(lo - 1e-9));
    const double last = std::min(static_cast<double>(cap), std::floor(hi + 1e-9));
    if (!(last >= first) || last - first + 1 < static_cast<double>(kMinWindowPoints)) return std::nullopt;
    return std::pair{static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

std::optional<PowerLawFit> fit_window(std::span<const double> values, double lo, double hi, std::size_t cap,
                                      double exponent) {
    const auto w = window(lo, hi, cap);
    if (!w) return std::nullopt;
    return fit_power_law(values, w->first, w->second, exponent);
}

}  // namespace

PowerLawFit fit_power_law(std::span<const double> values, std::size_t first, std::size_t last,
                          double nominal_exponent) {
    if (first < 1 || last < first + 1 || last > values.size())
        throw DomainError("window", "power-law window [" + std::to_string(first) + ", " + std::to_string(last) +
                                        "] needs at least two points inside the data");
    const std::size_t count = last - first + 1;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, shift = 0.0;
    for (std::size_t n = first; n <= last; ++n) {
        const double y = values[n - 1];
        if (!(y > 0.0)) throw DomainError("window", "non-positive value at index " + std::to_string(n));
        const double lx = std::log(static_cast<double>(n));
        const double ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        shift += ly - nominal_exponent * lx;
    }
    const double k = static_cast<double>(count);
    PowerLawFit fit;
    fit.first = first;
    fit.last = last;
    fit.nominal_exponent = nominal_exponent;
    const double log_c = shift / k;
    fit.coefficient = std::exp(log_c);
    const double denom = k * sxx - sx * sx;
    fit.free_exponent = (k * sxy - sx * sy) / denom;
    fit.free_coefficient = std::exp((sy - fit.free_exponent * sx) / k);

    double ss = 0.0;
    for (std::size_t n = first; n <= last; ++n) {
        const double d = std::log(values[n - 1]) - log_c - nominal_exponent * std::log(static_cast<double>(n));
        ss += d * d;
    }
    fit.residual = std::sqrt(ss / k);
    return fit;
}

EigenvalueRegimes fit_eigenvalue_regimes(const SpectralData& s) {
    const double a = s.params.a;
    const double crossover = 1.0 / a;
    const double tail_lo = std::max(10.0, kGuardFactor * crossover);
    const std::size_t cap = std::min(s.n_trunc / 2, s.resolved);
    const std::span<const double> values(s.eigenvalues);

    auto tail = fit_window(values, tail_lo, static_cast<double>(cap), cap, -2.0);
    if (!tail) {
        const auto required = static_cast<std::size_t>(2.0 * (std::ceil(tail_lo) + kMinWindowPoints));
        throw NumericalError("eigenvalue tail window [" + std::to_string(static_cast<std::size_t>(tail_lo)) + ", " +
                             std::to_string(cap) + "] is too small; requires N >= " + std::to_string(required));
    }
    EigenvalueRegimes out{fit_window(values, 1.0, crossover / kGuardFactor, cap, -1.0), *tail};
    return out;
}

WeightRegimes fit_weight_regimes(const SpectralData& s, const SeriesOptions& opts) {
    if (!s.has_weights()) throw NumericalError("spectral weights were not computed for this decomposition");
    const double inv_a = 1.0 / s.params.a;
    const double inv_eps = s.params.epsilon > 0.0 ? 1.0 / s.params.epsilon : kInf;
    const double lo = std::min(inv_a, inv_eps);
    const double hi = std::max(inv_a, inv_eps);
    const std::size_t cap = usable_modes(s, opts);
    const std::span<const double> values(s.weights);

    WeightRegimes out;
    out.head = fit_window(values, 1.0, lo / kGuardFactor, cap, -3.0);
    if (hi / lo < kGuardFactor * kGuardFactor) {
        out.intermediate_absent = true;
        out.tail = fit_window(values, kGuardFactor * hi, static_cast<double>(cap), cap, -6.0);
        return out;
    }
    if (std::isinf(hi)) {
        // Point-like target: the n^-6 regime moves to infinity.
        out.intermediate = fit_window(values, kGuardFactor * lo, static_cast<double>(cap), cap, -4.0);
        return out;
    }
    out.intermediate = fit_window(values, kGuardFactor * lo, hi / kGuardFactor, cap, -4.0);
    out.tail = fit_window(values, kGuardFactor * hi, static_cast<double>(cap), cap, -6.0);
    return out;
}

AsymptoticFit fit_asymptotics(const SpectralData& s, const SeriesOptions& opts) {
    AsymptoticFit fit;
    try {
        EigenvalueRegimes ev = fit_eigenvalue_regimes(s);
        fit.a_tilde = ev.head;
        fit.a_eps = ev.tail;
    } catch (const NumericalError&) {
        // tail window empty at this truncation; leave both unset
    }
    if (s.has_weights()) {
        WeightRegimes wr = fit_weight_regimes(s, opts);
        fit.b_tilde = wr.head;
        fit.b_prime = wr.intermediate;
        fit.b_eps = wr.tail;
        fit.intermediate_absent = wr.intermediate_absent;
    }
    if (s.params.epsilon > 0.0 && fit.a_eps && fit.b_eps) fit.c1 = c1_coefficient(fit, s.params);
    return fit;
}

double c1_coefficient(const AsymptoticFit& fit, const ModelParams& p) {
    if (!(p.epsilon > 0.0)) throw DomainError("epsilon", "out of range, C1 is defined for epsilon > 0");
    if (!fit.a_eps || !fit.b_eps) throw NumericalError("C1 requires both the eigenvalue and the weight tail fits");
    const double a_eps = fit.a_eps->coefficient;
    const double b_eps = fit.b_eps->coefficient;
    return std::sqrt(p.d1) / p.d2 * p.ejection_factor() * b_eps / (8.0 * std::pow(a_eps, 2.5));
}

LogDivergenceFit check_log_divergence(double a, double d2, std::span<const double> eps_grid, std::size_t n_trunc,
                                      const SeriesOptions& opts) {
    if (eps_grid.size() < 2) throw DomainError("eps_grid", "needs at least two target sizes");
    if (std::all_of(eps_grid.begin(), eps_grid.end(), [a](double e) { return e < a; }))
        throw DomainError("eps_grid", "every target size lies below a; the logarithmic regime does not apply");

    LogDivergenceFit out;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (double eps : eps_grid) {
        ModelParams p{a, eps, 1.0, d2, 0.0};
        validate_extended_target(p);
        if (eps < a) out.regime_violation = true;
        const double t = met_limit(spectrum(p, n_trunc), opts).value;
        const double x = std::log(1.0 / eps);
        out.epsilons.push_back(eps);
        out.limits.push_back(t);
        sx += x;
        sy += t;
        sxx += x * x;
        sxy += x * t;
    }
    const double k = static_cast<double>(eps_grid.size());
    out.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    out.intercept = (sy - out.slope * sx) / k;
    double ss = 0.0;
    for (std::size_t i = 0; i < out.epsilons.size(); ++i) {
        const double d = out.limits[i] - (out.intercept + out.slope * std::log(1.0 / out.epsilons[i]));
        ss += d * d;
    }
    out.residual_rms = std::sqrt(ss / k);
    return out;
}

}  // namespace escape
