#include "escape/spectral.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <cblas.h>
#include <lapacke.h>

#include "escape/asymptotics.hpp"

namespace escape {

namespace {

constexpr double kPi = std::numbers::pi;

double surface_integral(const ModelParams& p) {
    const double arc = kPi - p.epsilon;
    return arc * arc * arc / 3.0;
}

void require_weights(const SpectralData& s) {
    if (!s.has_weights()) throw NumericalError("spectral weights were not computed for this decomposition");
}

double ejection_prefactor(const ModelParams& p) { return p.ejection_factor() / (4.0 * p.d2); }

}  // namespace

SpectralData decompose(const OperatorMatrix& m, const DecomposeOptions& opts) {
    const std::size_t n = m.n_trunc;
    if (n == 0 || m.entries.size() != n * n) throw DomainError("matrix", "empty or inconsistent operator matrix");
    const auto ni = static_cast<lapack_int>(n);

    std::vector<double> work = m.entries;
    std::vector<double> ascending(n);
    const char jobz = opts.weights || opts.keep_vectors || opts.verify ? 'V' : 'N';
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, jobz, 'U', ni, work.data(), ni, ascending.data());
    if (info > 0)
        throw NumericalError("symmetric eigensolver did not converge (LAPACK info = " + std::to_string(info) + ")");
    if (info < 0) throw NumericalError("symmetric eigensolver rejected argument " + std::to_string(-info));

    SpectralData s;
    s.n_trunc = n;
    s.params = m.params;
    s.eigenvalues.assign(ascending.rbegin(), ascending.rend());

    const double top = std::max(s.eigenvalues.front(), 0.0);
    s.tol_eig = opts.tol_eig_rel * top;

    if (opts.verify) {
        // R = M V - V diag(w), one column per eigenpair.
        std::vector<double> mv(n * n);
        cblas_dgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, ni, ni, ni, 1.0, m.entries.data(), ni,
                    work.data(), ni, 0.0, mv.data(), ni);
        const double norm = std::max(std::abs(ascending.front()), std::abs(ascending.back()));
        for (std::size_t j = 0; j < n; ++j) {
            double r2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double r = mv[j * n + i] - ascending[j] * work[j * n + i];
                r2 += r * r;
            }
            const double residual = std::sqrt(r2);
            if (residual > opts.residual_tol * std::max(norm, DBL_MIN))
                throw NumericalError("eigenpair " + std::to_string(n - j) + " residual " + std::to_string(residual) +
                                     " exceeds tolerance");
        }
    }

    if (opts.weights) {
        const PsiProjection psi = psi_projection(m.params, n);
        std::vector<double> proj(n);
        cblas_dgemv(CblasColMajor, CblasTrans, ni, ni, 1.0, work.data(), ni, psi.coords.data(), 1, 0.0, proj.data(), 1);
        s.weights.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double c = proj[n - 1 - k];
            s.weights[k] = 2.0 / kPi * c * c;
        }
    }

    if (opts.keep_vectors) {
        s.vectors.resize(n * n);
        for (std::size_t k = 0; k < n; ++k)
            std::copy_n(work.begin() + static_cast<std::ptrdiff_t>((n - 1 - k) * n), n,
                        s.vectors.begin() + static_cast<std::ptrdiff_t>(k * n));
    }

    for (double& w : s.eigenvalues)
        if (w <= s.tol_eig) w = 0.0;
    s.resolved = static_cast<std::size_t>(
        std::count_if(s.eigenvalues.begin(), s.eigenvalues.end(), [](double w) { return w > 0.0; }));
    return s;
}

SpectralData spectrum(const ModelParams& p, std::size_t n_trunc, const DecomposeOptions& opts) {
    return decompose(assemble_vtv(p, n_trunc), opts);
}

Extrapolation extrapolate_partial_sums(std::span<const std::pair<double, double>> partials, double max_condition) {
    constexpr int kOrder = 4;
    if (partials.size() < kOrder + 2)
        throw DomainError("partials", "extrapolation needs at least 6 samples, got " + std::to_string(partials.size()));
    for (std::size_t i = 0; i < partials.size(); ++i) {
        if (!(partials[i].first > 0.0)) throw DomainError("partials", "sample sizes must be positive");
        if (i > 0 && !(partials[i].first > partials[i - 1].first))
            throw DomainError("partials", "sample sizes must be strictly increasing");
    }

    // Work in t = x / x_max with x = 1/N so the Vandermonde columns stay O(1).
    const double x_max = 1.0 / partials.front().first;
    const auto rows = static_cast<Eigen::Index>(partials.size());
    auto fit = [&](int order) {
        Eigen::MatrixXd a(rows, order + 1);
        Eigen::VectorXd f(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double t = (1.0 / partials[static_cast<std::size_t>(i)].first) / x_max;
            double power = 1.0;
            for (int k = 0; k <= order; ++k) {
                a(i, k) = power;
                power *= t;
            }
            f(i) = partials[static_cast<std::size_t>(i)].second;
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const double cond = sv(0) / sv(sv.size() - 1);
        Eigen::VectorXd c = svd.solve(f);
        const double rms = std::sqrt((a * c - f).squaredNorm() / static_cast<double>(rows));
        return std::tuple{c(0), cond, rms};
    };

    auto [limit, cond, rms] = fit(kOrder);
    if (!(cond <= max_condition))
        throw NumericalError("partial-sum extrapolation is ill-conditioned (condition " + std::to_string(cond) + ")");
    auto [lower, cond_lower, rms_lower] = fit(kOrder - 1);
    (void)cond_lower;
    (void)rms_lower;
    return Extrapolation{limit, lower, rms, cond};
}

std::size_t usable_modes(const SpectralData& s, const SeriesOptions& opts) {
    const auto k = static_cast<std::size_t>(opts.usable_fraction * static_cast<double>(s.resolved));
    return std::clamp<std::size_t>(k, std::min<std::size_t>(s.resolved, 1), s.resolved);
}

double met_subtracted_form(const SpectralData& s, double lambda, std::size_t k) {
    require_weights(s);
    const ModelParams& p = s.params;
    const double x = lambda / p.d1;
    double series = 0.0;
    for (std::size_t n = 0; n < std::min(k, s.resolved); ++n) series += s.weights[n] / (1.0 + x * s.eigenvalues[n]);
    return (1.0 + lambda * ejection_prefactor(p)) / (kPi * p.d1) * (surface_integral(p) - x * series);
}

double met_resolvent_form(const SpectralData& s, double lambda, std::size_t k) {
    require_weights(s);
    if (!(lambda > 0.0)) throw DomainError("lambda", "out of range, the resolvent form requires lambda > 0");
    const ModelParams& p = s.params;
    const double shift = p.d1 / lambda;
    double series = 0.0;
    for (std::size_t n = 0; n < std::min(k, s.resolved); ++n) {
        const double w = s.eigenvalues[n];
        series += s.weights[n] / (w * (shift + w));
    }
    return (1.0 / kPi) * (1.0 / lambda + ejection_prefactor(p)) * series;
}

MetResult met(const SpectralData& s, double lambda, const SeriesOptions& opts) {
    require_weights(s);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda", "out of range, requires lambda >= 0");
    const ModelParams& p = s.params;

    MetResult r;
    if (lambda == 0.0) {
        r.value = surface_integral(p) / (kPi * p.d1);
        r.truncation_n = s.resolved;
        return r;
    }
    if (s.resolved == 0) {
        // Target covers the whole circle.
        r.truncation_n = 0;
        return r;
    }

    const std::size_t k = usable_modes(s, opts);
    const double x = lambda / p.d1;
    r.truncation_n = k;

    const bool extrapolate = k >= 2 * opts.grid_points && opts.grid_points >= 6;
    if (x * s.eigenvalues[k - 1] <= opts.direct_form_limit || !extrapolate) {
        r.value = met_subtracted_form(s, lambda, k);
        // Missing tail behaves like x * sum_{n>k} psi_n^2; weights decay at
        // least as n^-4 so the remainder is below k/3 times the last weight.
        const double prefactor = (1.0 + lambda * ejection_prefactor(p)) / (kPi * p.d1);
        const double tail = x * s.weights[k - 1] * static_cast<double>(k) / 3.0;
        const double rounding = DBL_EPSILON * static_cast<double>(k) * surface_integral(p);
        r.residual_estimate = prefactor * (tail + rounding);
    } else {
        const double shift = p.d1 / lambda;
        auto grid = partial_sum_grid(k, opts.grid_points, [&](std::size_t n) {
            const double w = s.eigenvalues[n];
            return s.weights[n] / (w * (shift + w));
        });
        const Extrapolation e = extrapolate_partial_sums(grid);
        const double prefactor = (1.0 / kPi) * (1.0 / lambda + ejection_prefactor(p));
        r.value = prefactor * e.limit;
        r.extrapolated = true;
        r.residual_estimate = prefactor * (std::abs(e.limit - e.lower_order_limit) + e.residual_rms);
    }
    r.value = std::max(r.value, 0.0);
    r.warning = r.residual_estimate > opts.warn_rtol * std::abs(r.value);
    return r;
}

MetResult met_limit(const SpectralData& s, const SeriesOptions& opts) {
    require_weights(s);
    const ModelParams& p = s.params;
    if (!(p.epsilon > 0.0))
        throw DomainError("epsilon", "out of range, the large-lambda limit diverges for a point-like target");

    MetResult r;
    if (s.resolved == 0) return r;
    const std::size_t k = usable_modes(s, opts);
    const double prefactor = p.ejection_factor() / (4.0 * kPi * p.d2);
    r.truncation_n = k;
    auto term = [&](std::size_t n) {
        const double w = s.eigenvalues[n];
        return s.weights[n] / (w * w);
    };
    if (k < 2 * opts.grid_points) {
        double sum = 0.0;
        for (std::size_t n = 0; n < k; ++n) sum += term(n);
        r.value = prefactor * sum;
        r.residual_estimate = r.value;
        r.warning = true;
        return r;
    }
    auto grid = partial_sum_grid(k, opts.grid_points, term);
    const Extrapolation e = extrapolate_partial_sums(grid);
    r.value = prefactor * e.limit;
    r.extrapolated = true;
    r.residual_estimate = prefactor * (std::abs(e.limit - e.lower_order_limit) + e.residual_rms);
    r.warning = r.residual_estimate > opts.warn_rtol * std::abs(r.value);
    return r;
}

Extrapolation spectral_identity_sum(const SpectralData& s, const SeriesOptions& opts) {
    require_weights(s);
    const std::size_t k = usable_modes(s, opts);
    if (k < 2 * opts.grid_points) throw NumericalError("too few resolved modes for extrapolation");
    auto grid = partial_sum_grid(k, opts.grid_points,
                                 [&](std::size_t n) { return s.weights[n] / s.eigenvalues[n]; });
    return extrapolate_partial_sums(grid);
}

MetCurve met_curve(const SpectralData& s, std::span<const double> lambdas, const SeriesOptions& opts) {
    if (lambdas.empty()) throw DomainError("lambdas", "empty grid");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] >= 0.0)) throw DomainError("lambdas", "grid values must be >= 0");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw DomainError("lambdas", "grid must be strictly increasing");
    }
    MetCurve curve;
    curve.lambdas.assign(lambdas.begin(), lambdas.end());
    curve.values.reserve(lambdas.size());
    for (double l : lambdas) curve.values.push_back(met(s, l, opts));

    const bool degenerate = lambdas.size() == 1 && lambdas.front() == 0.0;
    if (s.params.epsilon > 0.0 && !degenerate && s.resolved > 0) {
        curve.limit_t = met_limit(s, opts).value;
        try {
            curve.c1 = c1_coefficient(fit_asymptotics(s, opts), s.params);
        } catch (const NumericalError&) {
            curve.c1.reset();
        } catch (const DomainError&) {
            curve.c1.reset();
        }
    }
    return curve;
}

double initial_slope(const SpectralData& s) {
    require_weights(s);
    const ModelParams& p = s.params;
    double norm2 = 0.0;
    for (std::size_t n = 0; n < s.resolved; ++n) norm2 += s.weights[n];
    return p.ejection_factor() / (4.0 * p.d1 * p.d2) * surface_integral(p) - norm2 / (p.d1 * p.d1);
}

std::optional<double> find_optimal_lambda(const SpectralData& s, std::pair<double, double> bracket,
                                          const SeriesOptions& opts) {
    auto [lo, hi] = bracket;
    if (!(lo > 0.0) || !(hi > lo)) throw DomainError("bracket", "requires 0 < lower < upper");
    if (initial_slope(s) >= 0.0) return std::nullopt;

    auto f = [&](double u) { return met(s, std::exp(u), opts).value; };
    auto slope = [&](double u) {
        const double h = 1e-4;
        return (f(u + h) - f(u - h)) / (2.0 * h);
    };
    double a = std::log(lo);
    double b = std::log(hi);
    if (!(slope(a) < 0.0 && slope(b) > 0.0))
        throw DomainError("bracket", "met'(lambda) does not change sign inside [" + std::to_string(lo) + ", " +
                                         std::to_string(hi) + "]");

    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > 1e-7) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    return std::exp(0.5 * (a + b));
}

}  // namespace escape
