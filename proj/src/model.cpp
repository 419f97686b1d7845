#include "escape/model.hpp"

#include <cmath>
#include <numbers>

namespace escape {

namespace {

void require(bool ok, const char* field, const char* bound) {
    if (!ok) throw DomainError(field, std::string("out of range, requires ") + bound);
}

}  // namespace

ModelParams validate_params(const ModelParams& p) {
    // Negated comparisons so that NaN fails every check.
    require(p.a > 0.0 && p.a <= 1.0, "a", "0 < a <= 1");
    require(p.epsilon >= 0.0 && p.epsilon <= std::numbers::pi, "epsilon", "0 <= epsilon <= pi");
    require(p.d1 > 0.0 && std::isfinite(p.d1), "d1", "D1 > 0");
    require(p.d2 > 0.0 && std::isfinite(p.d2), "d2", "D2 > 0");
    require(p.lambda >= 0.0 && std::isfinite(p.lambda), "lambda", "lambda >= 0");
    return p;
}

ModelParams validate_extended_target(const ModelParams& p) {
    validate_params(p);
    require(p.epsilon > 0.0, "epsilon", "epsilon > 0 for an extended target");
    return p;
}

}  // namespace escape
