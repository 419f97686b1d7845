#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace escape {

/// Raised when an input violates a documented bound. The message names the
/// offending quantity first ("a", "epsilon", ...).
class DomainError : public std::invalid_argument {
public:
    DomainError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Eigensolver breakdown, ill-conditioned fit, or an unusable spectrum.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested allocation exceeds the configured cap.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physical parameters of surface-mediated diffusion in the unit disk.
///
/// The absorbing target is the arc of half-width `epsilon` centred at
/// angle pi. After desorption the particle restarts bulk motion at radius
/// 1 - a along the same angle.
struct ModelParams {
    double a = 0.01;        ///< ejection distance, 0 < a <= 1
    double epsilon = 0.01;  ///< target half-width in radians, 0 <= epsilon <= pi
    double d1 = 1.0;        ///< surface diffusion coefficient
    double d2 = 1.0;        ///< bulk diffusion coefficient
    double lambda = 0.0;    ///< desorption rate

    bool operator==(const ModelParams&) const = default;

    /// 1 - (1-a)^2, the factor multiplying every bulk-time contribution.
    double ejection_factor() const noexcept { return 1.0 - (1.0 - a) * (1.0 - a); }
};

/// Returns `p` unchanged if every bound holds, else throws DomainError naming
/// the first violated bound. NaNs are rejected.
ModelParams validate_params(const ModelParams& p);

/// Same as validate_params but additionally requires epsilon > 0.
ModelParams validate_extended_target(const ModelParams& p);

struct MetResult {
    double value = 0.0;
    std::size_t truncation_n = 0;
    bool extrapolated = false;
    double residual_estimate = 0.0;
    /// Set when residual_estimate exceeds the caller's relative tolerance.
    bool warning = false;
};

struct MetCurve {
    std::vector<double> lambdas;
    std::vector<MetResult> values;
    std::optional<double> limit_t;
    std::optional<double> c1;
};

}  // namespace escape
