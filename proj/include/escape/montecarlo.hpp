#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "escape/model.hpp"
#include "escape/philox.hpp"

namespace escape {

enum class BulkMode {
    /// Jump straight to the exit angle (wrapped Cauchy) and add the expected
    /// excursion time (1-(1-a)^2)/(4 D2).
    ExactJump,
    /// Time-stepped 2D Brownian motion inside the disk.
    Euler,
};

struct SimConfig {
    ModelParams params;
    std::size_t n_paths = 100'000;
    /// Surface step; 0 selects default_surface_step(params).
    double dt_surface = 0.0;
    std::uint64_t seed = 1;
    /// Starting angle; empty means uniform on (-pi, pi].
    std::optional<double> start;
    BulkMode bulk_mode = BulkMode::ExactJump;
    /// Bulk step for BulkMode::Euler; 0 selects default_bulk_step(params).
    double dt_bulk = 0.0;
    /// Brownian-bridge crossing test between steps.
    bool bridge = true;
};

struct SimEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    SimConfig config;
};

/// min(eps, pi-eps, 1)^2 * 1e-2 / D1.
double default_surface_step(const ModelParams& p);
/// min(a, 1)^2 * 1e-2 / D2.
double default_bulk_step(const ModelParams& p);

/// Throws DomainError on invalid configuration, including epsilon = 0.
SimConfig validate_config(const SimConfig& cfg);

/// Mean exit time estimate. Identical (seed, config) give bit-identical
/// results for any worker count.
SimEstimate simulate_met(const SimConfig& cfg);

struct BulkExcursion {
    double exit_angle = 0.0;  ///< in (-pi, pi]
    double duration = 0.0;    ///< expected duration from radius 1 - a
};

BulkExcursion bulk_excursion_exact(double theta_start, double a, double d2, PhiloxStream& rng);

/// Time-stepped excursion from radius 1 - a; duration is the sampled time.
BulkExcursion bulk_excursion_euler(double theta_start, double a, double d2, double dt, bool bridge,
                                   PhiloxStream& rng);

struct ConvergenceRow {
    double dt = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    /// dt * D1 > eps^2: the walk can step across the whole target.
    bool too_coarse = false;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    /// Successive means agree within 3 combined standard errors.
    bool consistent = true;
    /// Weighted linear fit mean(dt) = m0 + m1 dt evaluated at dt = 0.
    double extrapolated = 0.0;
    double extrapolated_stderr = 0.0;
};

/// Reruns simulate_met for each surface step with the same seed. Throws
/// NumericalError when successive differences grow as dt shrinks beyond the
/// noise level.
ConvergenceStudy convergence_study(const SimConfig& cfg, std::span<const double> dt_sequence);

}  // namespace escape
