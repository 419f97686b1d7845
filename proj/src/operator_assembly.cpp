#include "escape/operator_assembly.hpp"

#include <array>
#include <bit>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>

#include "escape/parallel.hpp"

namespace escape {

namespace {

constexpr std::array<char, 4> kMagic = {'V', 'T', 'V', 'M'};
constexpr std::uint32_t kCacheVersion = 1;

double alternating_sign(std::size_t k) { return (k % 2 == 0) ? 1.0 : -1.0; }

void check_size(std::size_t n_trunc, std::size_t max_n) {
    if (n_trunc < 1) throw DomainError("n_trunc", "out of range, requires N >= 1");
    if (n_trunc > max_n)
        throw ResourceError("truncation N = " + std::to_string(n_trunc) + " exceeds cap " +
                            std::to_string(max_n));
}

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4] = {};
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

std::vector<double> ejection_weights(double a, std::size_t count) {
    std::vector<double> w(count);
    const double q = 1.0 - a;
    double power = 1.0;
    for (std::size_t n = 0; n < count; ++n) {
        power *= q;
        if (power < DBL_MIN) power = 0.0;
        w[n] = 1.0 - power;
    }
    return w;
}

OperatorMatrix assemble_vtv(const ModelParams& p, std::size_t n_trunc, std::size_t max_n) {
    validate_params(p);
    check_size(n_trunc, max_n);

    OperatorMatrix out;
    out.n_trunc = n_trunc;
    out.params = p;
    out.entries.assign(n_trunc * n_trunc, 0.0);

    const std::vector<double> u = ejection_weights(p.a, n_trunc);
    const double eps = p.epsilon;
    const double pi = std::numbers::pi;

    if (eps == 0.0) {
        for (std::size_t n = 1; n <= n_trunc; ++n) {
            double nn = static_cast<double>(n);
            out.entries[(n - 1) * n_trunc + (n - 1)] = u[n - 1] / (nn * nn);
        }
        return out;
    }

    std::vector<double> v(n_trunc);
    for (std::size_t i = 0; i < n_trunc; ++i) v[i] = std::sqrt(u[i]);

    // Upper triangle per row, mirrored afterwards so both halves hold the
    // same bits.
    auto fill_rows = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t m = i + 1;
            const double md = static_cast<double>(m);
            double* row = out.entries.data() + i * n_trunc;
            row[i] = v[i] * v[i] / pi * (pi - eps + std::sin(2.0 * md * eps) / (2.0 * md)) / (md * md);
            for (std::size_t j = i + 1; j < n_trunc; ++j) {
                const std::size_t n = j + 1;
                const double nd = static_cast<double>(n);
                const double diff = md - nd;
                const double sum = md + nd;
                const double bracket = std::sin(diff * eps) / diff - std::sin(sum * eps) / sum;
                row[j] = -v[i] * v[j] / pi * alternating_sign(m + n) / (md * nd) * bracket;
            }
        }
    };
    parallel_chunks(n_trunc, worker_count(), fill_rows);

    for (std::size_t i = 0; i < n_trunc; ++i)
        for (std::size_t j = i + 1; j < n_trunc; ++j)
            out.entries[j * n_trunc + i] = out.entries[i * n_trunc + j];
    return out;
}

PsiProjection psi_projection(const ModelParams& p, std::size_t n_trunc) {
    validate_params(p);
    if (n_trunc < 1) throw DomainError("n_trunc", "out of range, requires N >= 1");
    const std::vector<double> u = ejection_weights(p.a, n_trunc);
    const double eps = p.epsilon;
    const double arc = std::numbers::pi - eps;

    PsiProjection out;
    out.coords.resize(n_trunc);
    for (std::size_t i = 0; i < n_trunc; ++i) {
        const double m = static_cast<double>(i + 1);
        const double shape = arc * std::cos(m * eps) + std::sin(m * eps) / m;
        out.coords[i] = std::sqrt(u[i]) * alternating_sign(i) / (m * m) * shape;
    }
    return out;
}

void save_matrix(const OperatorMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, kCacheVersion);
    put_u32(out, static_cast<std::uint32_t>(m.n_trunc));
    put_u32(out, 0);
    for (double x : m.entries) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
        out.write(reinterpret_cast<const char*>(b), 8);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

OperatorMatrix load_matrix(const std::filesystem::path& path, const ModelParams& params,
                           std::size_t max_n) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw IoError("not a VTVM matrix cache: " + path.string());
    const std::uint32_t version = get_u32(in);
    if (version != kCacheVersion)
        throw IoError("unsupported VTVM version " + std::to_string(version));
    const std::uint32_t n = get_u32(in);
    get_u32(in);
    check_size(n, max_n);

    OperatorMatrix m;
    m.n_trunc = n;
    m.params = params;
    m.entries.resize(static_cast<std::size_t>(n) * n);
    for (double& x : m.entries) {
        unsigned char b[8] = {};
        in.read(reinterpret_cast<char*>(b), 8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        x = std::bit_cast<double>(bits);
    }
    if (!in) throw IoError("truncated VTVM matrix cache: " + path.string());
    return m;
}

}  // namespace escape
