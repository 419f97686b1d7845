#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "escape/model.hpp"
#include "escape/spectral.hpp"

namespace escape {

/// Power law y_n ~ C n^p fitted in log-log space with equal weights over the
/// 1-based index window [first, last].
struct PowerLawFit {
    std::size_t first = 0;
    std::size_t last = 0;
    double nominal_exponent = 0.0;
    double coefficient = 0.0;       ///< C with p held at nominal_exponent
    double residual = 0.0;          ///< RMS of log deviations for the fixed-exponent fit
    double free_exponent = 0.0;     ///< slope of the unconstrained log-log regression
    double free_coefficient = 0.0;

    std::size_t points() const noexcept { return last >= first ? last - first + 1 : 0; }
};

/// Fits `values[n-1]` for n in [first, last]. Throws DomainError when the
/// window holds fewer than two points or touches a non-positive value.
PowerLawFit fit_power_law(std::span<const double> values, std::size_t first, std::size_t last,
                          double nominal_exponent);

/// Crossover bands of width factor 3 around each crossover index are
/// excluded from every fit window.
inline constexpr double kGuardFactor = 3.0;
inline constexpr std::size_t kMinWindowPoints = 3;

struct EigenvalueRegimes {
    std::optional<PowerLawFit> head;  ///< lambda_n ~ A~ / n, n << 1/a
    PowerLawFit tail;                 ///< lambda_n ~ A_eps / n^2, n >> 1/a
};

/// Throws NumericalError naming the required truncation when the tail
/// window [max(10, 3/a), N/2] is empty.
EigenvalueRegimes fit_eigenvalue_regimes(const SpectralData& s);

struct WeightRegimes {
    std::optional<PowerLawFit> head;          ///< psi_n^2 ~ B~ n^-3
    std::optional<PowerLawFit> intermediate;  ///< psi_n^2 ~ B~' n^-4
    std::optional<PowerLawFit> tail;          ///< psi_n^2 ~ B n^-6
    /// The two crossovers 1/a and 1/eps are too close for a separate
    /// intermediate window.
    bool intermediate_absent = false;
};

WeightRegimes fit_weight_regimes(const SpectralData& s, const SeriesOptions& opts = {});

struct AsymptoticFit {
    std::optional<PowerLawFit> a_tilde;
    std::optional<PowerLawFit> a_eps;
    std::optional<PowerLawFit> b_tilde;
    std::optional<PowerLawFit> b_prime;
    std::optional<PowerLawFit> b_eps;
    bool intermediate_absent = false;
    std::optional<double> c1;
};

/// Runs both regime fits; fits whose windows are empty are left unset.
AsymptoticFit fit_asymptotics(const SpectralData& s, const SeriesOptions& opts = {});

/// Coefficient of the -lambda^{-1/2} correction to the large-lambda limit:
/// C1 = sqrt(D1)/D2 * (1-(1-a)^2) * B / (8 A^{5/2}).
double c1_coefficient(const AsymptoticFit& fit, const ModelParams& p);

/// Predicted large-lambda behaviour T - C1/sqrt(lambda).
inline double limit_with_correction(double limit_t, double c1, double lambda) {
    return limit_t - c1 / std::sqrt(lambda);
}

struct LogDivergenceFit {
    std::vector<double> epsilons;
    std::vector<double> limits;  ///< large-lambda limit per epsilon
    double slope = 0.0;          ///< d T / d ln(1/eps)
    double intercept = 0.0;
    double residual_rms = 0.0;
    /// Some grid points lie below a, where the logarithmic law is altered.
    bool regime_violation = false;
};

/// Regresses the large-lambda limit against ln(1/eps) for fixed a and D2.
/// Throws DomainError when every grid point lies below a.
LogDivergenceFit check_log_divergence(double a, double d2, std::span<const double> eps_grid,
                                      std::size_t n_trunc = kDefaultTruncation, const SeriesOptions& opts = {});

}  // namespace escape
