// Acceptance run: one PASS/FAIL line per criterion, followed by the
// measured numbers. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/oracles.hpp"
#include "escape/asymptotics.hpp"
#include "escape/closed_forms.hpp"
#include "escape/montecarlo.hpp"
#include "escape/spectral.hpp"

using namespace escape;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail << (ok ? "" : "[x] ") << what << "; ";
    }
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i)
        g[i] = std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * i / double(count - 1));
    return g;
}

// Surface-only mean exit time averaged over the circle, by quadrature of
// the one-dimensional solution ((pi-eps)^2 - t^2) / (2 D1).
double surface_quadrature(double eps, double d1) {
    const double w = kPi - eps;
    return oracle::integrate([&](double t) { return (w * w - t * t) / (2.0 * d1); }, 0.0, w, 8) / kPi;
}

// Decomposition shared by the eigenvalue and weight tail criteria.
const SpectralData& large_spectrum() {
    static const SpectralData s = spectrum({0.001, 0.1, 1, 1, 0}, 8000);
    return s;
}

Verdict surface_only() {
    Verdict v;
    double worst = 0.0;
    for (double eps : {0.01, 0.1, 1.0})
        for (double a : {0.001, 0.1}) {
            const double value = met(spectrum({a, eps, 1, 1, 0}, 1024), 0.0).value;
            worst = std::max(worst, std::abs(value / surface_quadrature(eps, 1.0) - 1.0));
        }
    v.require(worst <= 1e-12, "max rel dev from quadrature " + fmt("%.2e", worst));
    const double fig = met(spectrum({0.01, 0.01, 1, 1, 0}, 1024), 0.0).value;
    v.require(std::abs(fig - 3.2586) < 5e-5, "eps=0.01 value " + fmt("%.6f", fig) + " vs 3.2586");
    return v;
}

Verdict bulk_only() {
    Verdict v;
    const double targets[] = {5.2929, 2.9949};
    const double eps[] = {0.01, 0.1};
    for (int i = 0; i < 2; ++i) {
        const double value = met_bulk_only(eps[i], 1.0).value;
        // Converged series value, from the generating function of the Legendre sum.
        const double converged = -std::log(std::sin(eps[i] / 2.0));
        v.require(std::abs(value - targets[i]) <= 5e-4, "eps=" + fmt("%g", eps[i]) + " value " + fmt("%.6f", value) +
                                                            " vs " + fmt("%.4f", targets[i]) + " (converged " +
                                                            fmt("%.6f", converged) + ")");
    }
    return v;
}

Verdict transportation() {
    Verdict v;
    for (double eps : {0.01, 0.1}) {
        const double exact = (kPi - eps) / (4.0 * eps);
        const double lim = met_limit(spectrum({1.0, eps, 1, 1, 0}, 2048)).value;
        v.require(std::abs(lim / exact - 1.0) <= 0.01,
                  "eps=" + fmt("%g", eps) + " spectral limit " + fmt("%.4f", lim) + " vs " + fmt("%.4f", exact));
    }
    const double t1 = met_transportation_limit(0.01, 1.0).value, t2 = met_transportation_limit(0.1, 1.0).value;
    v.require(std::abs(t1 - 78.2898) < 5e-5 && std::abs(t2 - 7.6040) < 5e-5,
              "closed forms " + fmt("%.6f", t1) + ", " + fmt("%.6f", t2));
    return v;
}

Verdict bulk_limit() {
    Verdict v;
    const MetResult r = met_limit(spectrum({0.001, 0.01, 1, 1, 0}, 2048));
    v.require(std::abs(r.value / 5.2929 - 1.0) <= 0.03, "limit " + fmt("%.5f", r.value) + " vs 5.2929");
    return v;
}

Verdict eps0_spectrum() {
    Verdict v;
    double worst = 0.0;
    for (double a : {0.001, 0.01, 0.5}) {
        const std::size_t n = 1024;
        const SpectralData s = spectrum({a, 0.0, 1, 1, 0}, n, {.weights = false});
        std::vector<double> expected(n);
        for (std::size_t k = 1; k <= n; ++k) expected[k - 1] = (1.0 - std::pow(1.0 - a, double(k))) / double(k * k);
        std::sort(expected.rbegin(), expected.rend());
        for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(s.eigenvalues[k] / expected[k] - 1.0));
    }
    v.require(worst <= 1e-12, "max rel dev " + fmt("%.2e", worst));
    return v;
}

Verdict spectral_identity() {
    Verdict v;
    double worst = 0.0;
    for (double eps : {0.01, 0.1, 1.0})
        for (double a : {0.001, 0.1}) {
            const double sum = spectral_identity_sum(spectrum({a, eps, 1, 1, 0}, 1024)).limit;
            const double w = kPi - eps;
            // (pi-eps)^3/3 written as the integral of the surface solution
            const double target = oracle::integrate([&](double t) { return w * w - t * t; }, 0.0, w, 8) / 2.0;
            worst = std::max(worst, std::abs(sum / target - 1.0));
        }
    v.require(worst <= 5e-3, "max rel dev " + fmt("%.2e", worst));
    return v;
}

// Minimum of a curve sampled on {0} U grid: index and value.
std::pair<std::size_t, double> argmin(const std::vector<double>& values) {
    const auto it = std::min_element(values.begin(), values.end());
    return {static_cast<std::size_t>(it - values.begin()), *it};
}

Verdict optimality() {
    Verdict v;
    const double limit = kPi * kPi / (12.0 * oracle::zeta3());
    const double crit = d2_crit({1e-8, 0.0, 1, 1, 0});
    v.require(std::abs(crit / limit - 1.0) <= 1e-6, "d2_crit " + fmt("%.9f", crit) + " vs " + fmt("%.9f", limit));

    std::vector<double> grid{0.0};
    for (double l : log_grid(1e-3, 1e6, 181)) grid.push_back(l);
    for (double eps : {0.0, 0.01}) {
        std::optional<SpectralData> s;
        if (eps > 0.0) s = spectrum({0.01, eps, 1, 1, 0}, 1024);
        for (double d2 : {2.0, 0.5}) {
            std::vector<double> values, slack;
            for (double l : grid) {
                MetResult r;
                if (eps == 0.0) {
                    r = met_point_target({0.01, 0.0, 1, d2, l});
                } else {
                    SpectralData sd = *s;
                    sd.params.d2 = d2;
                    r = met(sd, l);
                }
                values.push_back(r.value);
                slack.push_back(r.residual_estimate);
            }
            const std::string tag = "eps=" + fmt("%g", eps) + " D2=" + fmt("%g", d2);
            if (d2 > 1.0) {
                const auto [i, m] = argmin(values);
                v.require(i > 0 && i + 1 < values.size(),
                          tag + " interior minimum at lambda " + fmt("%.3g", grid[i]) + " (" + fmt("%.4f", m) + " < " +
                              fmt("%.4f", values[0]) + ")");
            } else {
                bool monotone = true;
                for (std::size_t i = 1; i < values.size(); ++i)
                    monotone = monotone && values[i] - values[i - 1] >= -(slack[i] + slack[i - 1]);
                v.require(monotone, tag + " monotone increasing");
            }
        }
    }
    return v;
}

Verdict bounds() {
    Verdict v;
    bool inside = true;
    for (double a : {0.01, 0.1})
        for (double l : {1e2, 1e3, 1e4}) {
            const ModelParams p{a, 0.0, 1, 1, l};
            const BoundsPair b = bounds_point_target(p);
            const double t = met_point_target(p).value;
            inside = inside && b.lower <= t && t <= b.upper;
        }
    v.require(inside, "bounds hold on the grid");
    for (double a : {0.01, 0.1}) {
        const ModelParams p{a, 0.0, 1, 1, 1e6};
        const double ratio = met_point_target(p).value / std::sqrt(p.lambda) / (kPi * p.ejection_factor() / 4.0);
        v.require(std::abs(ratio - 1.0) <= 0.1, "a=" + fmt("%g", a) + " value/(sqrt(lambda) lead) " + fmt("%.4f", ratio));
    }
    return v;
}

Verdict a_eps_conjecture() {
    Verdict v;
    for (double eps : {0.1, 0.5, 1.0}) {
        const double target = std::pow(1.0 - eps / kPi, 2);
        const SpectralData small =
            eps == 0.1 ? large_spectrum() : spectrum({0.001, eps, 1, 1, 0}, 8000, {.weights = false});
        const PowerLawFit fs = fit_eigenvalue_regimes(small).tail;
        const PowerLawFit fl = fit_eigenvalue_regimes(spectrum({0.1, eps, 1, 1, 0}, 2048, {.weights = false})).tail;
        const std::string tag = "eps=" + fmt("%g", eps);
        v.require(std::abs(fs.coefficient / target - 1.0) <= 0.05 && std::abs(fl.coefficient / target - 1.0) <= 0.05,
                  tag + " A " + fmt("%.4f", fs.coefficient) + " (a=0.001), " + fmt("%.4f", fl.coefficient) +
                      " (a=0.1) vs " + fmt("%.4f", target));
        const double spread = std::abs(fs.coefficient - fl.coefficient);
        const double noise = fs.coefficient * fs.residual + fl.coefficient * fl.residual;
        v.require(spread <= noise, tag + " a-spread " + fmt("%.4f", spread) + " vs residuals " + fmt("%.4f", noise));
    }
    return v;
}

Verdict weight_regimes() {
    Verdict v;
    const WeightRegimes wr = fit_weight_regimes(large_spectrum());
    auto check = [&](const std::optional<PowerLawFit>& f, double nominal, const char* name) {
        if (!f) {
            v.require(false, std::string(name) + " window empty");
            return;
        }
        v.require(std::abs(f->free_exponent - nominal) <= 0.15,
                  std::string(name) + " [" + std::to_string(f->first) + "," + std::to_string(f->last) + "] exponent " +
                      fmt("%.3f", f->free_exponent) + " vs " + fmt("%g", nominal));
    };
    check(wr.head, -3.0, "head");
    check(wr.intermediate, -4.0, "intermediate");
    check(wr.tail, -6.0, "tail");
    v.require(fit_weight_regimes(spectrum({0.01, 0.01, 1, 1, 0}, 1024)).intermediate_absent,
              "a=eps=0.01 intermediate reported absent");
    return v;
}

Verdict monte_carlo() {
    Verdict v;
    const ModelParams base{0.1, 0.1, 1, 1, 0};
    const SpectralData s = spectrum(base, 1024);
    for (double l : {0.0, 1.0, 10.0}) {
        const double spectral = met(s, l).value;
        SimConfig c;
        c.params = base;
        c.params.lambda = l;
        c.n_paths = 100'000;
        c.dt_surface = 2.5e-4;
        c.seed = 2024;
        const SimEstimate jump = simulate_met(c);
        c.bulk_mode = BulkMode::Euler;
        c.dt_bulk = 2.5e-4;
        const SimEstimate euler = simulate_met(c);
        const std::string tag = "lambda=" + fmt("%g", l);
        for (const SimEstimate* e : {&jump, &euler}) {
            const char* mode = e == &jump ? " jump " : " euler ";
            v.require(std::abs(e->mean - spectral) <= 3.0 * e->std_error && e->std_error <= 0.01 * e->mean,
                      tag + mode + fmt("%.4f", e->mean) + "+-" + fmt("%.4f", e->std_error) + " vs " +
                          fmt("%.4f", spectral));
        }
        v.require(std::abs(jump.mean - euler.mean) <= 3.0 * std::hypot(jump.std_error, euler.std_error),
                  tag + " modes agree");
    }
    return v;
}

Verdict eventual_increase() {
    Verdict v;
    const std::vector<double> grid = log_grid(1e-2, 1e6, 81);
    const ModelParams sets[] = {{0.01, 0.01, 1, 0.5, 0}, {0.01, 0.01, 1, 1, 0}, {0.01, 0.01, 1, 2, 0},
                                {0.1, 0.1, 1, 1, 0},     {1.0, 0.1, 1, 1, 0},   {0.001, 0.5, 1, 1, 0}};
    for (const ModelParams& p : sets) {
        const MetCurve curve = met_curve(spectrum(p, 1024), grid);
        // Smallest grid index beyond which every forward difference is positive.
        std::size_t threshold = grid.size() - 1;
        while (threshold > 0 && curve.values[threshold].value > curve.values[threshold - 1].value) --threshold;
        v.require(grid[threshold] <= 1e5, "a=" + fmt("%g", p.a) + " eps=" + fmt("%g", p.epsilon) + " D2=" +
                                              fmt("%g", p.d2) + " increasing from " + fmt("%.3g", grid[threshold]));
    }

    const SpectralData s = spectrum({0.01, 0.01, 1, 1, 0}, 2048);
    const AsymptoticFit fit = fit_asymptotics(s);
    const double t = met_limit(s).value;
    if (!fit.c1) {
        v.require(false, "C1 fit unavailable");
        return v;
    }
    for (double l : {1e4, 1e5, 1e6}) {
        const double m = met(s, l).value, pred = limit_with_correction(t, *fit.c1, l);
        v.require(std::abs(pred / m - 1.0) <= 0.05,
                  "lambda=" + fmt("%g", l) + " T-C1/sqrt(lambda) " + fmt("%.4f", pred) + " vs " + fmt("%.4f", m));
    }
    return v;
}

Verdict diagonal() {
    Verdict v;
    const SpectralData base = spectrum({0.01, 0.01, 1, 1, 0}, 1024);
    std::vector<double> grid{0.0};
    for (double l : log_grid(1e-2, 1e2, 9)) grid.push_back(l);
    for (double d2 : {0.5, 2.0}) {
        SpectralData s = base;
        s.params.d2 = d2;
        double worst = 0.0;
        for (double l : grid) {
            ModelParams p = s.params;
            p.lambda = l;
            worst = std::max(worst, std::abs(met_diagonal_approx(p).value / met(s, l).value - 1.0));
        }
        v.require(worst <= 0.05, "D2=" + fmt("%g", d2) + " max rel gap " + fmt("%.2e", worst));
        ModelParams p = s.params;
        p.lambda = 1e8;
        const double d = met_diagonal_approx(p).value, t = met_limit(s).value;
        v.require(d >= 2.0 * t, "D2=" + fmt("%g", d2) + " at 1e8 " + fmt("%.3f", d) + " vs T " + fmt("%.3f", t));
    }
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    std::setvbuf(stdout, nullptr, _IOLBF, 0);
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"surface-only closed form", surface_only},
        {"bulk-only closed form", bulk_only},
        {"transportation case", transportation},
        {"bulk limit via spectrum", bulk_limit},
        {"eps=0 spectrum", eps0_spectrum},
        {"spectral identity", spectral_identity},
        {"optimality threshold", optimality},
        {"point-target bounds", bounds},
        {"A_eps conjecture", a_eps_conjecture},
        {"weight regimes", weight_regimes},
        {"Monte Carlo equivalence", monte_carlo},
        {"eventual increase and C1", eventual_increase},
        {"diagonal approximation", diagonal},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!v.pass) ++failures;
        std::printf("criterion %2d %s: %s | %s(%.1f s)\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first,
                    v.detail.str().c_str(), secs);
    }
    return failures == 0 ? 0 : 1;
}
