#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "escape/model.hpp"
#include "escape/operator_assembly.hpp"

namespace escape {

struct DecomposeOptions {
    /// Eigenvalues with |lambda_n| <= tol_eig_rel * lambda_1 are clamped to 0.
    double tol_eig_rel = 1e-12;
    /// Compute eigenvectors and spectral weights. Eigenvalue-only runs are
    /// several times cheaper and sufficient for eigenvalue tail fits.
    bool weights = true;
    /// Retain the eigenvector matrix in SpectralData (N*N doubles).
    bool keep_vectors = false;
    /// Check ||M v - lambda v|| <= residual_tol * ||M|| for every pair.
    bool verify = false;
    double residual_tol = 1e-10;
};

/// Eigen-decomposition of V T~ V with the spectral weights psi_n^2.
///
/// Eigenvalues are sorted in descending order. The trailing block below the
/// clamp threshold is the numerical image of the operator kernel (functions
/// supported on the target arc) and carries no weight.
struct SpectralData {
    std::size_t n_trunc = 0;
    std::vector<double> eigenvalues;
    std::vector<double> weights;  ///< psi_n^2, empty for eigenvalue-only runs
    ModelParams params;
    double tol_eig = 0.0;
    /// Number of eigenvalues above tol_eig.
    std::size_t resolved = 0;
    /// Column-major eigenvectors in cosine coordinates, column n matches
    /// eigenvalues[n]. Only filled with DecomposeOptions::keep_vectors.
    std::vector<double> vectors;

    bool has_weights() const noexcept { return !weights.empty(); }
};

SpectralData decompose(const OperatorMatrix& m, const DecomposeOptions& opts = {});

/// Convenience: assemble and decompose in one call.
SpectralData spectrum(const ModelParams& p, std::size_t n_trunc, const DecomposeOptions& opts = {});

struct Extrapolation {
    double limit = 0.0;
    /// Limit from the next lower fit order; |limit - lower_order_limit| is a
    /// cheap sensitivity estimate.
    double lower_order_limit = 0.0;
    double residual_rms = 0.0;
    double condition = 0.0;
};

/// Least-squares fit f(N) ~ c0 + c1/N + ... + c4/N^4 over the given samples
/// (N strictly increasing, at least six of them); returns c0.
Extrapolation extrapolate_partial_sums(std::span<const std::pair<double, double>> partials,
                                       double max_condition = 1e12);

struct SeriesOptions {
    /// Fraction of the resolved spectrum used for partial-sum extrapolation.
    /// The trailing Ritz values of the truncated matrix converge last.
    double usable_fraction = 0.75;
    std::size_t grid_points = 6;
    /// met() switches from the subtracted series to the extrapolated
    /// series once (lambda/D1) * lambda_K exceeds this.
    double direct_form_limit = 1e-2;
    /// Relative tolerance above which MetResult::warning is raised.
    double warn_rtol = 1e-4;
};

/// Number of leading eigenpairs entering truncated sums.
std::size_t usable_modes(const SpectralData& s, const SeriesOptions& opts = {});

/// Partial sums of sum_n term(n) at the extrapolation grid K = j*K_max/grid.
/// term receives the 0-based mode index.
template <typename Term>
std::vector<std::pair<double, double>> partial_sum_grid(std::size_t k_max, std::size_t grid, Term&& term) {
    std::vector<std::pair<double, double>> out;
    double acc = 0.0;
    std::size_t next = 1;
    for (std::size_t k = 0; k < k_max && next <= grid; ++k) {
        acc += term(k);
        if (k + 1 == k_max * next / grid) {
            out.emplace_back(static_cast<double>(k + 1), acc);
            ++next;
        }
    }
    return out;
}

/// Mean exit time averaged over a uniform start on the circle.
MetResult met(const SpectralData& s, double lambda, const SeriesOptions& opts = {});

/// Same quantity through the subtracted series (pi-eps)^3/3 - (lambda/D1) sum ...
/// over the first `k` modes, without extrapolation.
double met_subtracted_form(const SpectralData& s, double lambda, std::size_t k);

/// Same quantity through sum psi^2 / (lambda_n (D1/lambda + lambda_n)) over
/// the first `k` modes, without extrapolation. Requires lambda > 0.
double met_resolvent_form(const SpectralData& s, double lambda, std::size_t k);

/// Large-lambda limit of the mean exit time. Requires epsilon > 0.
MetResult met_limit(const SpectralData& s, const SeriesOptions& opts = {});

/// Extrapolated sum psi_n^2 / lambda_n, which should equal (pi-eps)^3/3.
Extrapolation spectral_identity_sum(const SpectralData& s, const SeriesOptions& opts = {});

MetCurve met_curve(const SpectralData& s, std::span<const double> lambdas, const SeriesOptions& opts = {});

/// pi * d<t1>/dlambda at lambda = 0; negative iff an interior minimum exists.
double initial_slope(const SpectralData& s);

/// Minimiser of met() inside `bracket` by golden-section search in
/// log(lambda). Returns nullopt when the slope at lambda = 0 is
/// non-negative (lambda = 0 is then optimal).
std::optional<double> find_optimal_lambda(const SpectralData& s, std::pair<double, double> bracket,
                                          const SeriesOptions& opts = {});

}  // namespace escape
