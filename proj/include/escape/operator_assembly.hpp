#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "escape/model.hpp"

namespace escape {

inline constexpr std::size_t kDefaultTruncation = 2000;
inline constexpr std::size_t kDefaultTruncationCap = 8000;

/// Dense symmetric representation of V T~ V in the basis cos(m theta),
/// m = 1..N. The constant mode is dropped: its row and column vanish
/// identically.
struct OperatorMatrix {
    std::size_t n_trunc = 0;
    std::vector<double> entries;  ///< row-major, n_trunc * n_trunc
    ModelParams params;

    /// 1-based access matching the cosine index: at(m, n) = [VTV]_{m,n}.
    double at(std::size_t m, std::size_t n) const { return entries[(m - 1) * n_trunc + (n - 1)]; }
};

/// Raw inner products <psi, cos m theta>, m = 1..N, with psi = V T~(1).
/// <psi, 1> = 0 and is not stored.
struct PsiProjection {
    std::vector<double> coords;
};

/// Values of 1 - (1-a)^n for n = 1..count. Powers are formed by repeated
/// multiplication and flushed to zero once they leave the normal range.
std::vector<double> ejection_weights(double a, std::size_t count);

OperatorMatrix assemble_vtv(const ModelParams& p, std::size_t n_trunc,
                            std::size_t max_n = kDefaultTruncationCap);

PsiProjection psi_projection(const ModelParams& p, std::size_t n_trunc);

/// Binary cache: "VTVM", u32 version, u32 N, u32 reserved, then N*N
/// little-endian doubles in row-major order.
void save_matrix(const OperatorMatrix& m, const std::filesystem::path& path);

/// Reads a cache written by save_matrix. The caller supplies the parameters
/// the matrix was built from; they are not stored in the file.
OperatorMatrix load_matrix(const std::filesystem::path& path, const ModelParams& params,
                           std::size_t max_n = kDefaultTruncationCap);

}  // namespace escape
