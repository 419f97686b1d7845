#include <doctest.h>

#include <cmath>
#include <numbers>

#include "escape/closed_forms.hpp"
#include "oracles.hpp"

using namespace escape;
constexpr double kPi = std::numbers::pi;

TEST_CASE("point target at lambda = 0 collapses to 2 zeta(2) / D1") {
    const MetResult r = met_point_target({0.3, 0.0, 2.0, 1, 0}, 1000);
    CHECK(r.value == doctest::Approx(kPi * kPi / 6.0).epsilon(1e-9));
    CHECK(met_surface_only({0.3, 0.0, 2.0, 1, 0}).value == doctest::Approx(kPi * kPi / 6.0).epsilon(1e-14));
    CHECK_THROWS_AS(met_point_target({0.3, 0.1, 1, 1, 0}), DomainError);
}

TEST_CASE("point target tail correction makes the sum insensitive to truncation") {
    const ModelParams p{0.01, 0.0, 1, 1, 1e4};
    const double coarse = met_point_target(p, 20000).value;
    const double fine = met_point_target(p, 1000000).value;
    CHECK(coarse == doctest::Approx(fine).epsilon(1e-8));
}

TEST_CASE("bounds sandwich the point-target series") {
    for (double a : {0.01, 0.1, 0.5, 0.99})
        for (double lambda : {0.1, 1.0, 1e2, 1e3, 1e4, 1e6})
            for (double d2 : {0.5, 2.0}) {
                const ModelParams p{a, 0.0, 1, d2, lambda};
                const BoundsPair b = bounds_point_target(p);
                const double t = met_point_target(p, 200000).value;
                CHECK(b.lower <= t);
                CHECK(t <= b.upper);
            }
    CHECK_THROWS_AS(bounds_point_target({1.0, 0.0, 1, 1, 10}), DomainError);
    CHECK_THROWS_AS(bounds_point_target({0.5, 0.0, 1, 1, 0}), DomainError);
    CHECK_THROWS_AS(bounds_point_target({0.5, 0.1, 1, 1, 10}), DomainError);
}

TEST_CASE("bound scalings read off the formulas") {
    const double lambda = 1e12;
    const ModelParams p{0.1, 0.0, 1, 1, lambda};
    const double lead = kPi * p.ejection_factor() / 4.0;
    CHECK(bounds_point_target(p).lower / std::sqrt(lambda) == doctest::Approx(lead).epsilon(1e-5));
    // With the bulk factor divided out the upper bound scales as a^{-1/2}.
    const ModelParams q{0.99, 0.0, 1, 1, 100};
    const ModelParams r{0.01, 0.0, 1, 1, 100};
    auto reduced = [](const ModelParams& m) {
        return bounds_point_target(m).upper / (1.0 + m.lambda * m.ejection_factor() / (4.0 * m.d2));
    };
    CHECK(reduced(r) / reduced(q) == doctest::Approx(std::sqrt(0.99 / 0.01)).epsilon(1e-12));
}

TEST_CASE("d2_crit tends to pi^2/(12 zeta(3)) monotonically as a -> 0") {
    const double limit = kPi * kPi / (12.0 * oracle::zeta3());
    CHECK(d2_crit_small_a_limit(1.0) == doctest::Approx(limit).epsilon(1e-12));
    CHECK(d2_crit({1e-8, 0.0, 1, 1, 0}) == doctest::Approx(limit).epsilon(1e-6));
    double prev_gap = 1e300;
    for (double a : {0.1, 0.01, 0.001}) {
        const double gap = std::abs(d2_crit({a, 0.0, 1, 1, 0}) - limit);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(d2_crit({1e-8, 0.0, 2.5, 1, 0}) == doctest::Approx(2.5 * limit).epsilon(1e-6));
}

TEST_CASE("d2_crit at a = 0.5 matches the finite-difference sign change of the point-target slope") {
    // Slope at lambda = 0 is affine in 1/D2; locate its root from two evaluations.
    const std::size_t terms = 200000;
    auto slope = [&](double d2) {
        const double h = 1e-6;
        const double t0 = met_point_target({0.5, 0.0, 1, d2, 0}, terms).value;
        const double t1 = met_point_target({0.5, 0.0, 1, d2, h}, terms).value;
        const double t2 = met_point_target({0.5, 0.0, 1, d2, 2 * h}, terms).value;
        return (-3.0 * t0 + 4.0 * t1 - t2) / (2.0 * h);
    };
    const double s1 = slope(1.0), s2 = slope(2.0);
    // s(D2) = alpha + beta / D2
    const double beta = (s1 - s2) / (1.0 - 0.5);
    const double alpha = s1 - beta;
    const double root = -beta / alpha;
    CHECK(d2_crit({0.5, 0.0, 1, 1, 0}) == doctest::Approx(root).epsilon(1e-5));
}

TEST_CASE("d2_crit rejects the degenerate full target") {
    CHECK_THROWS_AS(d2_crit({0.1, kPi, 1, 1, 0}), DomainError);
    // eps > 0 reduces continuously to the eps = 0 value.
    CHECK(d2_crit({0.1, 1e-7, 1, 1, 0}) == doctest::Approx(d2_crit({0.1, 0.0, 1, 1, 0})).epsilon(1e-5));
}

TEST_CASE("surface-only values") {
    CHECK(met_surface_only({0.1, kPi, 1, 1, 0}).value == 0.0);
    CHECK(met_surface_only({0.1, 0.01, 1, 1, 0}).value == doctest::Approx(std::pow(kPi - 0.01, 3) / (3 * kPi)));
}

TEST_CASE("bulk-only: small-eps asymptotics, monotonicity, edge cases") {
    for (double eps : {1e-3, 1e-2}) {
        const double v = met_bulk_only(eps, 1.0).value;
        CHECK(std::abs(v / std::log(2.0 / eps) - 1.0) < 3.0 * eps);
    }
    double prev = 1e300;
    for (double eps = 0.05; eps <= kPi; eps += 0.05) {
        const double v = met_bulk_only(eps, 2.0).value * 2.0;
        CHECK(v < prev);
        prev = v;
    }
    CHECK(std::abs(met_bulk_only(kPi, 1.0).value) < 1e-5);
    CHECK_THROWS_AS(met_bulk_only(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(met_bulk_only(0.1, 0.0), DomainError);
    CHECK(met_bulk_only(0.1, 2.0).value == doctest::Approx(met_bulk_only(0.1, 1.0).value / 2.0));
}

TEST_CASE("bulk-only Legendre recurrence against the standard library polynomials") {
    const double eps = 0.7;
    const unsigned terms = 400;
    const double x = std::cos(eps);
    double sum = 0.0;
    for (unsigned n = 1; n <= terms; ++n)
        sum += std::sin(n * eps) / (2.0 * n * n) * (std::legendre(n, x) + std::legendre(n - 1, x));
    const double expected = (-(kPi - eps) * std::log(std::sin(eps / 2)) + sum) / kPi;
    CHECK(met_bulk_only(eps, 1.0, terms).value == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("transportation limit") {
    CHECK(met_transportation_limit(0.01, 1.0).value == doctest::Approx(78.2898).epsilon(1e-6));
    CHECK(met_transportation_limit(0.1, 1.0).value == doctest::Approx(7.6040).epsilon(1e-5));
    CHECK(met_transportation_limit(kPi, 1.0).value == 0.0);
    CHECK_THROWS_AS(met_transportation_limit(0.0, 1.0), DomainError);
}

TEST_CASE("diagonal approximation equals the point-target series at eps = 0") {
    for (double lambda : {0.0, 1.0, 1e3, 1e6}) {
        const ModelParams p{0.01, 0.0, 1, 2, lambda};
        CHECK(met_diagonal_approx(p, 50000).value == doctest::Approx(met_point_target(p, 50000).value).epsilon(1e-12));
    }
}

TEST_CASE("diagonal approximation at eps > 0: surface value at lambda = 0, linear divergence at large lambda") {
    const ModelParams p{0.01, 0.1, 1, 1, 0};
    CHECK(met_diagonal_approx(p).value == doctest::Approx(met_surface_only(p).value).epsilon(1e-14));

    // Uncancelled constant (pi-eps)^3/3 - 2 sum g_n^2/(h_n n^2), summed directly.
    const double e = p.epsilon, w = kPi - e;
    double k_eps = 0.0;
    const int terms = 4000000;
    for (int n = terms; n >= 1; --n) {
        const double g = w * std::cos(n * e) + std::sin(n * e) / n;
        const double h = w + std::sin(2.0 * n * e) / (2.0 * n);
        k_eps += g * g / (h * double(n) * n);
    }
    k_eps = w * w * w / 3.0 - 2.0 * (k_eps + w / (2.0 * (terms + 0.5)));
    CHECK(k_eps < 0.0);

    // Value ~ lambda * (1-(1-a)^2) K / (4 pi D1 D2): unbounded, of the sign of K.
    const double slope = p.ejection_factor() * k_eps / (4.0 * kPi);
    double prev = 0.0;
    for (double lambda : {1e7, 1e8, 1e9, 1e10}) {
        ModelParams q = p;
        q.lambda = lambda;
        const double v = met_diagonal_approx(q).value;
        CHECK(std::abs(v) > 5.0 * prev);
        prev = std::abs(v);
        if (lambda >= 1e9) CHECK(v / lambda == doctest::Approx(slope).epsilon(0.03));
    }
    // Truncation insensitivity of the tail correction.
    ModelParams q = p;
    q.lambda = 100.0;
    CHECK(met_diagonal_approx(q, 20000).value == doctest::Approx(met_diagonal_approx(q, 400000).value).epsilon(1e-6));
}

TEST_CASE("Sturm-Liouville eigenbasis") {
    CHECK(sturm_liouville_eigenbasis(0.0, 0).eigenvalue == doctest::Approx(4.0));
    CHECK(sturm_liouville_eigenbasis(kPi / 2, 1).eigenvalue == doctest::Approx(1.0 / 9.0));
    CHECK_THROWS_AS(sturm_liouville_eigenbasis(kPi, 0), DomainError);

    // Oracle: (T f)(t) = int_t^{pi-eps} ds int_0^s f(r) dr by nested quadrature.
    for (double eps : {0.0, 0.3, 2.0})
        for (std::size_t n : {0u, 1u, 4u}) {
            const SturmLiouvilleMode m = sturm_liouville_eigenbasis(eps, n);
            const double end = m.support_end;
            auto inner = [&](double s) { return oracle::integrate([&](double r) { return m.profile(r); }, 0.0, s, 8); };
            for (double t : {0.0, 0.25 * end, 0.7 * end}) {
                const double tf = oracle::integrate(inner, t, end, 8);
                CHECK(tf == doctest::Approx(m.eigenvalue * m.profile(t)).epsilon(1e-9).scale(1e-12));
            }
            // Normalisation on the support.
            const double norm = oracle::integrate([&](double r) { return m.profile(r) * m.profile(r); }, 0.0, end, 16);
            CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
        }
}
