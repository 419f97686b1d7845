#include "escape/closed_forms.hpp"

#include <cmath>
#include <numbers>

namespace escape {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kWarnRtol = 1e-4;
// zeta(3), Apery's constant.
constexpr double kApery = 1.2020569031595942854;

// 1 - (1-a)^n without cancellation for small a.
double ejection_weight(double a, double n) { return -std::expm1(n * std::log1p(-a)); }

void require_series_terms(std::size_t n_terms) {
    if (n_terms < 1) throw DomainError("n_terms", "out of range, must be >= 1");
}

void require_arc(double epsilon, double d2) {
    if (!(epsilon > 0.0 && epsilon <= kPi))
        throw DomainError("epsilon", "out of range, must satisfy 0 < epsilon <= pi");
    if (!(d2 > 0.0) || !std::isfinite(d2)) throw DomainError("d2", "out of range, must be positive");
}

// int_y^inf dt / (t^2 + k)
double tail_resolvent(double y, double k) {
    if (k <= 0.0) return 1.0 / y;
    const double r = std::sqrt(k);
    return std::atan(r / y) / r;
}

// int_y^inf dt / (t^2 (t^2 + k))
double tail_resolvent_sq(double y, double k) {
    const double z = k / (y * y);
    if (z < 1e-3) return (1.0 / 3.0 - z / 5.0 + z * z / 7.0) / (y * y * y);
    return (1.0 / y - tail_resolvent(y, k)) / k;
}

MetResult finish(double value, double residual, std::size_t n_terms) {
    MetResult r;
    r.value = value;
    r.truncation_n = n_terms;
    r.residual_estimate = residual;
    r.warning = residual > kWarnRtol * std::abs(value);
    return r;
}

}  // namespace

MetResult met_point_target(const ModelParams& p, std::size_t n_terms) {
    validate_params(p);
    if (p.epsilon != 0.0) throw DomainError("epsilon", "out of range, the point-like target needs epsilon = 0");
    require_series_terms(n_terms);

    const double x = p.lambda / p.d1;
    double sum = 0.0;
    // Smallest terms first.
    for (std::size_t n = n_terms; n >= 1; --n) {
        const double nn = static_cast<double>(n);
        sum += 1.0 / (nn * nn + x * ejection_weight(p.a, nn));
    }
    const double y = static_cast<double>(n_terms) + 0.5;
    const double u_next = ejection_weight(p.a, static_cast<double>(n_terms + 1));
    const double tail = tail_resolvent(y, x * u_next);
    // u_n rises from u_{N+1} to 1 across the tail; midpoint rule error ~ 1/(12 y^3).
    const double tail_spread = std::abs(tail_resolvent(y, x) - tail) + 1.0 / (12.0 * y * y * y);

    const double pref = 2.0 / p.d1 * (1.0 + p.lambda * p.ejection_factor() / (4.0 * p.d2));
    return finish(pref * (sum + tail), pref * tail_spread, n_terms);
}

double bounds_f(double x) { return 1.0 - 2.0 / kPi * std::atan(std::sqrt(x)); }

BoundsPair bounds_point_target(const ModelParams& p) {
    validate_params(p);
    if (p.epsilon != 0.0) throw DomainError("epsilon", "out of range, the bounds need epsilon = 0");
    if (!(p.lambda > 0.0)) throw DomainError("lambda", "out of range, the bounds need lambda > 0");
    if (!(p.a < 1.0)) throw DomainError("a", "out of range, the upper bound needs a < 1");

    const double bulk = 1.0 + p.lambda * p.ejection_factor() / (4.0 * p.d2);
    const double root = std::sqrt(p.d1 * p.lambda);
    return {kPi * bounds_f(p.d1 / p.lambda) / root * bulk, kPi / (std::sqrt(p.a) * root) * bulk};
}

double d2_crit(const ModelParams& p, std::size_t n_terms) {
    validate_params(p);
    require_series_terms(n_terms);
    if (p.epsilon == kPi) throw DomainError("epsilon", "degenerate at epsilon = pi, both sides of the condition vanish");

    const double arc = kPi - p.epsilon;
    double sum = 0.0;
    for (std::size_t n = n_terms; n >= 1; --n) {
        const double nn = static_cast<double>(n);
        const double u = ejection_weight(p.a, nn) / (nn * nn * nn * nn);
        if (p.epsilon == 0.0) {
            sum += u;
        } else {
            const double g = arc * std::cos(nn * p.epsilon) + std::sin(nn * p.epsilon) / nn;
            sum += u * g * g;
        }
    }
    if (!(sum > 0.0)) throw NumericalError("d2_crit: denominator series vanished");
    if (p.epsilon == 0.0) return p.d1 * kPi * kPi * p.ejection_factor() / (24.0 * sum);
    return p.d1 * kPi * arc * arc * arc * p.ejection_factor() / 24.0 / sum;
}

double d2_crit_small_a_limit(double d1) {
    if (!(d1 > 0.0) || !std::isfinite(d1)) throw DomainError("d1", "out of range, must be positive");
    return d1 * kPi * kPi / (12.0 * kApery);
}

MetResult met_surface_only(const ModelParams& p) {
    validate_params(p);
    const double arc = kPi - p.epsilon;
    return finish(arc * arc * arc / (3.0 * kPi * p.d1), 0.0, 0);
}

MetResult met_bulk_only(double epsilon, double d2, std::size_t n_terms) {
    require_arc(epsilon, d2);
    require_series_terms(n_terms);

    const double x = std::cos(epsilon);
    double p_prev = 1.0;  // P_{n-1}
    double p_cur = x;     // P_n
    double sum = 0.0;
    for (std::size_t n = 1; n <= n_terms; ++n) {
        const double nn = static_cast<double>(n);
        sum += std::sin(nn * epsilon) / (2.0 * nn * nn) * (p_cur + p_prev);
        const double p_next = ((2.0 * nn + 1.0) * x * p_cur - nn * p_prev) / (nn + 1.0);
        p_prev = p_cur;
        p_cur = p_next;
    }
    const double lead = epsilon == kPi ? 0.0 : -(kPi - epsilon) * std::log(std::sin(epsilon / 2.0));
    // |P_n| <= 1 bounds the remainder by sum_{n>N} 1/n^2 < 1/N.
    const double scale = 1.0 / (kPi * d2);
    return finish(scale * (lead + sum), scale / static_cast<double>(n_terms), n_terms);
}

MetResult met_transportation_limit(double epsilon, double d2) {
    require_arc(epsilon, d2);
    return finish((kPi - epsilon) / (4.0 * d2 * epsilon), 0.0, 0);
}

MetResult met_diagonal_approx(const ModelParams& p, std::size_t n_terms) {
    validate_params(p);
    require_series_terms(n_terms);
    if (p.epsilon == 0.0) return met_point_target(p, n_terms);

    const double arc = kPi - p.epsilon;
    const double s0 = arc * arc * arc / 3.0;
    const double pref = (1.0 + p.lambda * p.ejection_factor() / (4.0 * p.d2)) / (kPi * p.d1);
    if (p.lambda == 0.0) return finish(pref * s0, 0.0, n_terms);

    const double k = p.lambda / (kPi * p.d1);
    double sum = 0.0;
    for (std::size_t n = n_terms; n >= 1; --n) {
        const double nn = static_cast<double>(n);
        const double u = ejection_weight(p.a, nn);
        const double g = arc * std::cos(nn * p.epsilon) + std::sin(nn * p.epsilon) / nn;
        const double h = arc + std::sin(2.0 * nn * p.epsilon) / (2.0 * nn);
        sum += u * g * g / (nn * nn * (nn * nn + k * u * h));
    }
    // Beyond N: u -> 1, h -> pi - eps, g^2 averages to (pi - eps)^2 / 2.
    const double y = static_cast<double>(n_terms) + 0.5;
    const double tail = 0.5 * arc * arc * tail_resolvent_sq(y, k * arc);
    const double bracket = s0 - 2.0 * k * (sum + tail);
    return finish(pref * bracket, pref * 2.0 * k * tail, n_terms);
}

double SturmLiouvilleMode::profile(double theta) const {
    const double t = std::abs(theta);
    if (t > support_end) return 0.0;
    return amplitude * std::cos(frequency * t);
}

SturmLiouvilleMode sturm_liouville_eigenbasis(double epsilon, std::size_t n) {
    if (!(epsilon >= 0.0 && epsilon < kPi))
        throw DomainError("epsilon", "out of range, the support [0, pi - epsilon] must be non-empty");
    const double shrink = 1.0 - epsilon / kPi;
    const double half = static_cast<double>(n) + 0.5;
    SturmLiouvilleMode m;
    m.eigenvalue = shrink * shrink / (half * half);
    m.amplitude = std::sqrt(2.0 / (kPi - epsilon));
    m.frequency = half / shrink;
    m.support_end = kPi - epsilon;
    return m;
}

}  // namespace escape
