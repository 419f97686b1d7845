#include "escape/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "escape/parallel.hpp"

namespace escape {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFar = 37.0;

double wrap_angle(double theta) {
    theta = std::remainder(theta, 2.0 * kPi);
    return theta <= -kPi ? theta + 2.0 * kPi : theta;
}

// Fixed-order pairwise summation: the result depends only on the data.
double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

struct PathRunner {
    const SimConfig& cfg;
    double edge;  // free arc is |theta| < edge
    double dt_surface;
    double dt_bulk;

    bool on_target(double theta) const { return std::abs(theta) >= edge; }

    // Surface phase from theta; returns true on absorption. Adds elapsed time.
    bool surface_phase(double& theta, double& t, PhiloxStream& rng) const {
        const ModelParams& p = cfg.params;
        const double tau = p.lambda > 0.0 ? rng.exponential(p.lambda) : std::numeric_limits<double>::infinity();
        double elapsed = 0.0;
        for (;;) {
            const double remaining = tau - elapsed;
            const bool last = remaining <= dt_surface;
            const double h = last ? remaining : dt_surface;
            const double y = theta + std::sqrt(2.0 * p.d1 * h) * rng.normal();
            elapsed = last ? tau : elapsed + h;
            if (on_target(y)) {
                t += elapsed;
                return true;
            }
            if (cfg.bridge) {
                // Exponents beyond kFar give probabilities below 1e-16; skip them.
                const double s = p.d1 * h;
                const double up = (edge - theta) * (edge - y) / s;
                const double down = (edge + theta) * (edge + y) / s;
                if ((up < kFar || down < kFar) && rng.uniform() < std::exp(-up) + std::exp(-down)) {
                    t += elapsed;
                    return true;
                }
            }
            theta = y;
            if (last) break;
        }
        t += elapsed;
        return false;
    }

    double run(std::size_t index) const {
        PhiloxStream rng(cfg.seed, index);
        const ModelParams& p = cfg.params;
        double theta = cfg.start ? wrap_angle(*cfg.start) : kPi * (2.0 * rng.uniform() - 1.0);
        if (on_target(theta)) return 0.0;
        double t = 0.0;
        for (;;) {
            if (surface_phase(theta, t, rng)) return t;
            const BulkExcursion b = cfg.bulk_mode == BulkMode::ExactJump
                                        ? bulk_excursion_exact(theta, p.a, p.d2, rng)
                                        : bulk_excursion_euler(theta, p.a, p.d2, dt_bulk, cfg.bridge, rng);
            t += b.duration;
            theta = b.exit_angle;
            if (on_target(theta)) return t;
        }
    }
};

}  // namespace

double default_surface_step(const ModelParams& p) {
    const double scale = std::min({p.epsilon, kPi - p.epsilon, 1.0});
    return scale * scale * 1e-2 / p.d1;
}

double default_bulk_step(const ModelParams& p) {
    const double scale = std::min(p.a, 1.0);
    return scale * scale * 1e-2 / p.d2;
}

SimConfig validate_config(const SimConfig& cfg) {
    SimConfig out = cfg;
    validate_extended_target(cfg.params);
    if (cfg.params.epsilon >= kPi) throw DomainError("epsilon", "out of range, the free arc must be non-empty");
    if (cfg.n_paths < 1) throw DomainError("n_paths", "out of range, must be >= 1");
    if (cfg.dt_surface == 0.0) out.dt_surface = default_surface_step(cfg.params);
    if (!(out.dt_surface > 0.0) || !std::isfinite(out.dt_surface))
        throw DomainError("dt_surface", "out of range, must be positive");
    if (cfg.bulk_mode == BulkMode::Euler) {
        if (cfg.dt_bulk == 0.0) out.dt_bulk = default_bulk_step(cfg.params);
        if (!(out.dt_bulk > 0.0) || !std::isfinite(out.dt_bulk))
            throw DomainError("dt_bulk", "out of range, must be positive in euler mode");
    }
    if (cfg.start && !std::isfinite(*cfg.start)) throw DomainError("start", "must be a finite angle");
    return out;
}

SimEstimate simulate_met(const SimConfig& input) {
    const SimConfig cfg = validate_config(input);
    const PathRunner runner{cfg, kPi - cfg.params.epsilon, cfg.dt_surface, cfg.dt_bulk};

    std::vector<double> times(cfg.n_paths);
    parallel_chunks(cfg.n_paths, worker_count() * 8, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) times[i] = runner.run(i);
    });

    const double n = static_cast<double>(cfg.n_paths);
    const double mean = pairwise_sum(times.data(), times.size()) / n;
    for (double& x : times) x = (x - mean) * (x - mean);
    const double var = cfg.n_paths > 1 ? pairwise_sum(times.data(), times.size()) / (n - 1.0) : 0.0;

    SimEstimate est;
    est.mean = mean;
    est.std_error = std::sqrt(var / n);
    est.n_paths = cfg.n_paths;
    est.config = cfg;
    return est;
}

BulkExcursion bulk_excursion_exact(double theta_start, double a, double d2, PhiloxStream& rng) {
    if (!(a > 0.0 && a <= 1.0)) throw DomainError("a", "out of range, must satisfy 0 < a <= 1");
    // Wrapped Cauchy with rho = 1 - a by inversion.
    const double rho = 1.0 - a;
    const double delta = 2.0 * std::atan((1.0 - rho) / (1.0 + rho) * std::tan(kPi * (rng.uniform() - 0.5)));
    return {wrap_angle(theta_start + delta), (1.0 - rho * rho) / (4.0 * d2)};
}

BulkExcursion bulk_excursion_euler(double theta_start, double a, double d2, double dt, bool bridge,
                                   PhiloxStream& rng) {
    if (!(a > 0.0 && a <= 1.0)) throw DomainError("a", "out of range, must satisfy 0 < a <= 1");
    const double r0 = 1.0 - a;
    double x = r0 * std::cos(theta_start);
    double y = r0 * std::sin(theta_start);
    const double sigma = std::sqrt(2.0 * d2 * dt);
    double t = 0.0;
    for (;;) {
        const double nx = x + sigma * rng.normal();
        const double ny = y + sigma * rng.normal();
        t += dt;
        const double r1 = std::hypot(nx, ny);
        if (r1 >= 1.0) return {std::atan2(ny, nx), t};
        if (bridge) {
            // Locally flat boundary: P(cross) = exp(-2 d0 d1 / sigma^2).
            const double d0 = 1.0 - std::hypot(x, y);
            const double d1 = 1.0 - r1;
            const double z = d0 * d1 / (d2 * dt);
            if (z < kFar && rng.uniform() < std::exp(-z)) return {std::atan2(ny, nx), t};
        }
        x = nx;
        y = ny;
    }
}

ConvergenceStudy convergence_study(const SimConfig& cfg, std::span<const double> dt_sequence) {
    if (dt_sequence.empty()) throw DomainError("dt_sequence", "must not be empty");
    for (std::size_t i = 1; i < dt_sequence.size(); ++i)
        if (!(dt_sequence[i] < dt_sequence[i - 1])) throw DomainError("dt_sequence", "must be strictly decreasing");

    ConvergenceStudy out;
    const double eps2 = cfg.params.epsilon * cfg.params.epsilon;
    for (double dt : dt_sequence) {
        SimConfig c = cfg;
        c.dt_surface = dt;
        const SimEstimate e = simulate_met(c);
        out.rows.push_back({dt, e.mean, e.std_error, dt * cfg.params.d1 > eps2});
    }

    double prev_gap = 0.0;
    for (std::size_t i = 1; i < out.rows.size(); ++i) {
        const ConvergenceRow& a = out.rows[i - 1];
        const ConvergenceRow& b = out.rows[i];
        const double noise = 3.0 * std::hypot(a.std_error, b.std_error);
        const double gap = std::abs(b.mean - a.mean);
        if (gap > noise) out.consistent = false;
        if (i > 1 && gap > noise && gap > 2.0 * prev_gap)
            throw NumericalError("discretization failure: mean moves by " + std::to_string(gap) + " at dt=" +
                                 std::to_string(b.dt) + ", growing as dt shrinks");
        prev_gap = gap;
    }

    // Weighted least squares in dt; a single row is its own estimate.
    if (out.rows.size() == 1) {
        out.extrapolated = out.rows[0].mean;
        out.extrapolated_stderr = out.rows[0].std_error;
        return out;
    }
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const ConvergenceRow& r : out.rows) {
        const double w = 1.0 / std::max(r.std_error * r.std_error, 1e-300);
        sw += w;
        sx += w * r.dt;
        sy += w * r.mean;
        sxx += w * r.dt * r.dt;
        sxy += w * r.dt * r.mean;
    }
    const double det = sw * sxx - sx * sx;
    out.extrapolated = (sxx * sy - sx * sxy) / det;
    out.extrapolated_stderr = std::sqrt(sxx / det);
    return out;
}

}  // namespace escape
