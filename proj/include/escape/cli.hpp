#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "escape/model.hpp"
#include "escape/montecarlo.hpp"
#include "escape/operator_assembly.hpp"

namespace escape {

/// Malformed command line or config file. Maps to exit code 2 like other
/// validation failures.
class UsageError : public DomainError {
public:
    explicit UsageError(const std::string& what) : DomainError("usage", what) {}
};

enum class Command { Solve, Spectrum, Limit, Asymptotics, ClosedForm, Simulate, Compare };
enum class Format { Csv, Json };

struct LambdaGrid {
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 1;
    bool log = false;
};

std::vector<double> lambda_values(const LambdaGrid& g);

struct RunConfig {
    Command command = Command::Solve;
    /// closed-form: surface, bulk, transportation, point-target, bounds,
    /// d2crit, diagonal, or all.
    std::string form = "all";
    ModelParams params;
    std::size_t n_trunc = kDefaultTruncation;
    /// Empty means the single value params.lambda.
    std::optional<LambdaGrid> lambda_grid;
    std::string output_path = "-";
    Format format = Format::Csv;
    /// Optional operator-matrix cache; read when present, written otherwise.
    std::string matrix_cache;

    std::uint64_t seed = 1;
    std::size_t n_paths = 100'000;
    double dt_surface = 0.0;
    double dt_bulk = 0.0;
    BulkMode bulk_mode = BulkMode::ExactJump;
    std::optional<double> start;

    std::vector<double> lambdas() const;
};

/// Parses argv-style arguments (without the program name). A `--config`
/// JSON file is applied first; flags then override its keys.
RunConfig parse_config(const std::vector<std::string>& args);

/// Result of a command: a header row plus cells that are numbers, strings,
/// booleans or null.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::ordered_json>> rows;
};

Table execute(const RunConfig& cfg);

std::string format_number(double x);
std::string to_csv(const Table& t);
std::string to_json(const RunConfig& cfg, const Table& t);
/// Deterministic JSON writer used for all output.
std::string emit_json(const nlohmann::ordered_json& j);

/// Executes and writes the output. Returns the process exit code:
/// 0 success, 2 validation, 3 numerical failure, 4 I/O.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// parse_config + run with the same exit-code mapping.
int main_with_args(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace escape
