#pragma once

#include <cstddef>

#include "escape/model.hpp"

namespace escape {

struct BoundsPair {
    double lower = 0.0;
    double upper = 0.0;
};

inline constexpr std::size_t kPointTargetTerms = 1'000'000;
inline constexpr std::size_t kBulkTerms = 100'000;

/// Point-like target (epsilon = 0):
/// (2/D1)(1 + lambda c) sum_n 1 / (n^2 + (lambda/D1)(1-(1-a)^n)),
/// with the tail beyond n_terms replaced by its integral.
MetResult met_point_target(const ModelParams& p, std::size_t n_terms = kPointTargetTerms);

/// Lower and upper bounds on met_point_target. Requires epsilon = 0,
/// lambda > 0 and a < 1.
BoundsPair bounds_point_target(const ModelParams& p);

/// F(x) = 1 - (2/pi) atan(sqrt(x)).
double bounds_f(double x);

/// Critical bulk diffusion coefficient: lambda = 0 is optimal iff D2 < d2_crit.
/// Throws DomainError for epsilon = pi, where both sides vanish.
double d2_crit(const ModelParams& p, std::size_t n_terms = kBulkTerms);

/// a -> 0 limit of d2_crit at epsilon = 0: D1 pi^2 / (12 zeta(3)).
double d2_crit_small_a_limit(double d1);

/// (pi-eps)^3 / (3 pi D1).
MetResult met_surface_only(const ModelParams& p);

/// Pure bulk diffusion from a uniform start on the circle. Legendre
/// polynomials come from the ascending three-term recurrence in cos(eps).
MetResult met_bulk_only(double epsilon, double d2, std::size_t n_terms = kBulkTerms);

/// a = 1: (pi - eps) / (4 D2 eps).
MetResult met_transportation_limit(double epsilon, double d2);

/// Mean exit time keeping only the diagonal of the operator matrix.
/// Reduces to met_point_target at epsilon = 0.
MetResult met_diagonal_approx(const ModelParams& p, std::size_t n_terms = kPointTargetTerms);

/// Eigenpair n >= 0 of the surface operator on [0, pi-eps]:
/// nu_n = (1-eps/pi)^2/(n+1/2)^2 with profile amplitude * cos(frequency * theta).
struct SturmLiouvilleMode {
    double eigenvalue = 0.0;
    double amplitude = 0.0;
    double frequency = 0.0;
    double support_end = 0.0;

    double profile(double theta) const;
};

SturmLiouvilleMode sturm_liouville_eigenbasis(double epsilon, std::size_t n);

}  // namespace escape
