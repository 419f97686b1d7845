#include "escape/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "escape/asymptotics.hpp"
#include "escape/closed_forms.hpp"
#include "escape/spectral.hpp"

namespace escape {

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kCommandList = "solve, spectrum, limit, asymptotics, closed-form, simulate, compare";

const std::map<std::string, Command>& command_names() {
    static const std::map<std::string, Command> names{
        {"solve", Command::Solve},         {"spectrum", Command::Spectrum}, {"limit", Command::Limit},
        {"asymptotics", Command::Asymptotics}, {"closed-form", Command::ClosedForm},
        {"simulate", Command::Simulate},   {"compare", Command::Compare},
    };
    return names;
}

std::string command_name(Command c) {
    for (const auto& [name, value] : command_names())
        if (value == c) return name;
    return "?";
}

Command parse_command(const std::string& s) {
    const auto it = command_names().find(s);
    if (it == command_names().end())
        throw UsageError("unknown command '" + s + "'; expected one of " + kCommandList);
    return it->second;
}

Format parse_format(const std::string& s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    throw UsageError("unknown format '" + s + "'; expected csv or json");
}

BulkMode parse_bulk_mode(const std::string& s) {
    if (s == "exact-jump") return BulkMode::ExactJump;
    if (s == "euler") return BulkMode::Euler;
    throw UsageError("unknown bulk mode '" + s + "'; expected exact-jump or euler");
}

std::optional<double> parse_start(const std::string& s) {
    if (s == "uniform") return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw UsageError("start must be 'uniform' or an angle, got '" + s + "'");
    return v;
}

std::size_t as_count(double v, const std::string& what) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e15) throw UsageError(what + " must be a positive integer");
    return static_cast<std::size_t>(v);
}

LambdaGrid make_grid(const std::vector<double>& v, bool log, const std::string& what) {
    if (v.size() != 3) throw UsageError(what + " expects MIN MAX COUNT");
    return {v[0], v[1], as_count(v[2], what + " COUNT"), log};
}

void apply_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    ojson j;
    try {
        j = ojson::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw UsageError("config file '" + path + "' must hold a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "command") cfg.command = parse_command(value.get<std::string>());
            else if (key == "form") cfg.form = value.get<std::string>();
            else if (key == "a") cfg.params.a = value.get<double>();
            else if (key == "eps") cfg.params.epsilon = value.get<double>();
            else if (key == "d1") cfg.params.d1 = value.get<double>();
            else if (key == "d2") cfg.params.d2 = value.get<double>();
            else if (key == "lambda") cfg.params.lambda = value.get<double>();
            else if (key == "n") cfg.n_trunc = as_count(value.get<double>(), "n");
            else if (key == "lambda_log") cfg.lambda_grid = make_grid(value.get<std::vector<double>>(), true, key);
            else if (key == "lambda_lin") cfg.lambda_grid = make_grid(value.get<std::vector<double>>(), false, key);
            else if (key == "output") cfg.output_path = value.get<std::string>();
            else if (key == "format") cfg.format = parse_format(value.get<std::string>());
            else if (key == "cache") cfg.matrix_cache = value.get<std::string>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "paths") cfg.n_paths = as_count(value.get<double>(), "paths");
            else if (key == "dt_surface") cfg.dt_surface = value.get<double>();
            else if (key == "dt_bulk") cfg.dt_bulk = value.get<double>();
            else if (key == "bulk_mode") cfg.bulk_mode = parse_bulk_mode(value.get<std::string>());
            else if (key == "start") cfg.start = value.is_number() ? std::optional(value.get<double>())
                                                                   : parse_start(value.get<std::string>());
            else throw UsageError("unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file '" + path + "': wrong value type: " + e.what());
    }
}

// ---- execution ------------------------------------------------------------

SpectralData make_spectrum(const RunConfig& cfg, bool weights) {
    DecomposeOptions opts;
    opts.weights = weights;
    if (cfg.matrix_cache.empty()) return spectrum(cfg.params, cfg.n_trunc, opts);
    const std::filesystem::path path(cfg.matrix_cache);
    if (std::filesystem::exists(path)) {
        OperatorMatrix m = load_matrix(path, cfg.params);
        if (m.n_trunc != cfg.n_trunc)
            throw DomainError("n", "cache '" + cfg.matrix_cache + "' holds N=" + std::to_string(m.n_trunc) +
                                       ", requested " + std::to_string(cfg.n_trunc));
        // The file carries no parameters; entries do not depend on N, so a
        // freshly assembled leading block identifies a stale cache.
        const std::size_t k = std::min<std::size_t>(8, m.n_trunc);
        const OperatorMatrix probe = assemble_vtv(cfg.params, k);
        for (std::size_t i = 1; i <= k; ++i)
            for (std::size_t j = 1; j <= k; ++j)
                if (std::abs(probe.at(i, j) - m.at(i, j)) > 1e-12 * std::abs(probe.at(1, 1)))
                    throw DomainError("cache", "'" + cfg.matrix_cache + "' was built for different a or epsilon");
        return decompose(m, opts);
    }
    OperatorMatrix m = assemble_vtv(cfg.params, cfg.n_trunc);
    save_matrix(m, path);
    return decompose(m, opts);
}

ojson num(double x) { return ojson(x); }
ojson opt_num(const std::optional<double>& x) { return x ? ojson(*x) : ojson(nullptr); }

Table solve(const RunConfig& cfg) {
    const SpectralData s = make_spectrum(cfg, true);
    const std::vector<double> grid = cfg.lambdas();
    const MetCurve curve = met_curve(s, grid);
    Table t{{"lambda", "met", "residual_estimate"}, {}};
    for (std::size_t i = 0; i < grid.size(); ++i)
        t.rows.push_back({num(grid[i]), num(curve.values[i].value), num(curve.values[i].residual_estimate)});
    return t;
}

Table spectrum_table(const RunConfig& cfg) {
    const SpectralData s = make_spectrum(cfg, true);
    Table t{{"n", "lambda_n", "psi_n_sq"}, {}};
    for (std::size_t n = 0; n < s.n_trunc; ++n)
        t.rows.push_back({ojson(n + 1), num(s.eigenvalues[n]), num(s.weights[n])});
    return t;
}

void add_fit(Table& t, const std::string& name, const std::optional<PowerLawFit>& f) {
    if (!f) {
        t.rows.push_back({name, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr});
        return;
    }
    t.rows.push_back({name, ojson(f->first), ojson(f->last), num(f->nominal_exponent), num(f->coefficient),
                      num(f->residual), num(f->free_exponent), num(f->free_coefficient)});
}

Table asymptotics_table(const RunConfig& cfg) {
    const SpectralData s = make_spectrum(cfg, true);
    const AsymptoticFit fit = fit_asymptotics(s);
    Table t{{"fit", "first", "last", "nominal_exponent", "coefficient", "residual", "free_exponent",
             "free_coefficient"},
            {}};
    add_fit(t, "a_tilde", fit.a_tilde);
    add_fit(t, "a_eps", fit.a_eps);
    add_fit(t, "b_tilde", fit.b_tilde);
    add_fit(t, "b_prime", fit.b_prime);
    add_fit(t, "b_eps", fit.b_eps);
    t.rows.push_back({"c1", nullptr, nullptr, nullptr, opt_num(fit.c1), nullptr, nullptr, nullptr});
    t.rows.push_back({"intermediate_absent", nullptr, nullptr, nullptr, ojson(fit.intermediate_absent), nullptr,
                      nullptr, nullptr});
    return t;
}

Table limit_table(const RunConfig& cfg) {
    validate_extended_target(cfg.params);
    const SpectralData s = make_spectrum(cfg, true);
    const MetResult lim = met_limit(s);
    const AsymptoticFit fit = fit_asymptotics(s);
    Table t{{"quantity", "value"}, {}};
    t.rows.push_back({"limit_t", num(lim.value)});
    t.rows.push_back({"limit_residual", num(lim.residual_estimate)});
    t.rows.push_back({"c1", opt_num(fit.c1)});
    t.rows.push_back({"a_eps", fit.a_eps ? num(fit.a_eps->coefficient) : ojson(nullptr)});
    t.rows.push_back({"b_eps", fit.b_eps ? num(fit.b_eps->coefficient) : ojson(nullptr)});
    return t;
}

Table closed_form_table(const RunConfig& cfg) {
    const ModelParams& p = validate_params(cfg.params);
    const std::string& f = cfg.form;
    static const std::vector<std::string> forms{"all",    "surface", "bulk",    "transportation",
                                                "point-target", "bounds", "d2crit", "diagonal"};
    if (std::find(forms.begin(), forms.end(), f) == forms.end())
        throw UsageError("unknown closed form '" + f + "'; expected one of surface, bulk, transportation, "
                         "point-target, bounds, d2crit, diagonal, all");
    const bool all = f == "all";
    const bool arc = p.epsilon > 0.0;
    Table t{{"quantity", "lambda", "value", "residual_estimate"}, {}};
    auto row = [&t](const std::string& name, ojson lambda, const MetResult& r) {
        t.rows.push_back({name, std::move(lambda), num(r.value), num(r.residual_estimate)});
    };

    if (all || f == "surface") row("surface", nullptr, met_surface_only(p));
    if ((all && arc) || f == "bulk") row("bulk", nullptr, met_bulk_only(p.epsilon, p.d2));
    if ((all && arc) || f == "transportation") row("transportation", nullptr, met_transportation_limit(p.epsilon, p.d2));
    if ((all && p.epsilon < std::numbers::pi) || f == "d2crit")
        t.rows.push_back({"d2crit", nullptr, num(d2_crit(p)), nullptr});
    for (double lambda : cfg.lambdas()) {
        ModelParams q = p;
        q.lambda = lambda;
        if ((all && !arc) || f == "point-target") row("point_target", lambda, met_point_target(q));
        if ((all && !arc && lambda > 0.0 && p.a < 1.0) || f == "bounds") {
            const BoundsPair b = bounds_point_target(q);
            t.rows.push_back({"lower_bound", lambda, num(b.lower), nullptr});
            t.rows.push_back({"upper_bound", lambda, num(b.upper), nullptr});
        }
        if (all || f == "diagonal") row("diagonal", lambda, met_diagonal_approx(q));
    }
    return t;
}

SimConfig sim_config(const RunConfig& cfg, double lambda) {
    SimConfig c;
    c.params = cfg.params;
    c.params.lambda = lambda;
    c.n_paths = cfg.n_paths;
    c.dt_surface = cfg.dt_surface;
    c.dt_bulk = cfg.dt_bulk;
    c.seed = cfg.seed;
    c.start = cfg.start;
    c.bulk_mode = cfg.bulk_mode;
    return c;
}

Table simulate_table(const RunConfig& cfg) {
    Table t{{"lambda", "mean", "std_error", "n_paths", "seed", "dt_surface", "dt_bulk", "bulk_mode"}, {}};
    for (double lambda : cfg.lambdas()) {
        const SimEstimate e = simulate_met(sim_config(cfg, lambda));
        const bool euler = e.config.bulk_mode == BulkMode::Euler;
        t.rows.push_back({num(lambda), num(e.mean), num(e.std_error), ojson(e.n_paths), ojson(e.config.seed),
                          num(e.config.dt_surface), euler ? num(e.config.dt_bulk) : ojson(nullptr),
                          euler ? "euler" : "exact-jump"});
    }
    return t;
}

Table compare_table(const RunConfig& cfg) {
    const SpectralData s = make_spectrum(cfg, true);
    const bool mc = cfg.params.epsilon > 0.0;
    Table t{{"lambda", "spectral", "spectral_residual", "diagonal", "diagonal_rel_gap", "mc_mean", "mc_std_error",
             "mc_agreement"},
            {}};
    for (double lambda : cfg.lambdas()) {
        const MetResult sp = met(s, lambda);
        ModelParams q = cfg.params;
        q.lambda = lambda;
        const double diag = met_diagonal_approx(q).value;
        std::vector<ojson> r{num(lambda), num(sp.value), num(sp.residual_estimate), num(diag),
                             num((diag - sp.value) / sp.value)};
        if (mc) {
            const SimEstimate e = simulate_met(sim_config(cfg, lambda));
            const bool ok = std::abs(sp.value - e.mean) <= 3.0 * e.std_error;
            r.insert(r.end(), {num(e.mean), num(e.std_error), ok ? "PASS" : "FAIL"});
        } else {
            r.insert(r.end(), {nullptr, nullptr, "n/a"});
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

std::string csv_cell(const ojson& v) {
    if (v.is_null()) return "";
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number()) return format_number(v.get<double>());
    std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

void emit(const ojson& j, std::string& out) {
    switch (j.type()) {
        case ojson::value_t::object: {
            out += '{';
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) out += ',';
                first = false;
                out += ojson(k).dump();
                out += ':';
                emit(v, out);
            }
            out += '}';
            break;
        }
        case ojson::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                emit(j[i], out);
            }
            out += ']';
            break;
        }
        case ojson::value_t::number_float: {
            const double x = j.get<double>();
            out += std::isfinite(x) ? format_number(x) : "null";
            break;
        }
        default:
            out += j.dump();
    }
}

int exit_code_for(const std::exception_ptr& e, std::ostream& err) {
    try {
        std::rethrow_exception(e);
    } catch (const DomainError& ex) {
        err << "error: " << ex.what() << '\n';
        return 2;
    } catch (const IoError& ex) {
        err << "error: " << ex.what() << '\n';
        return 4;
    } catch (const std::exception& ex) {
        // NumericalError, ResourceError, allocation failures
        err << "error: " << ex.what() << '\n';
        return 3;
    }
}

}  // namespace

std::vector<double> lambda_values(const LambdaGrid& g) {
    if (g.count < 1) throw DomainError("lambda_grid", "count must be >= 1");
    if (!(g.min >= 0.0) || !(g.max >= g.min) || !std::isfinite(g.max))
        throw DomainError("lambda_grid", "needs 0 <= min <= max");
    if (g.log && !(g.min > 0.0)) throw DomainError("lambda_grid", "log grid needs min > 0");
    if (g.count == 1) return {g.min};
    std::vector<double> v(g.count);
    const double steps = static_cast<double>(g.count - 1);
    for (std::size_t i = 0; i < g.count; ++i) {
        const double f = static_cast<double>(i) / steps;
        v[i] = g.log ? std::pow(10.0, std::log10(g.min) + f * (std::log10(g.max) - std::log10(g.min)))
                     : g.min + f * (g.max - g.min);
    }
    v.front() = g.min;
    v.back() = g.max;
    return v;
}

std::vector<double> RunConfig::lambdas() const {
    return lambda_grid ? lambda_values(*lambda_grid) : std::vector<double>{params.lambda};
}

RunConfig parse_config(const std::vector<std::string>& args) {
    if (args.empty())
        throw UsageError(std::string("escape_cli <command> [form] [options]\ncommands: ") + kCommandList);

    CLI::App app{"Mean exit time for surface-mediated diffusion in the disk", "escape_cli"};
    std::string command, form, config_path, format, bulk_mode, start, output, cache;
    double a = 0, eps = 0, d1 = 0, d2 = 0, lambda = 0, dt_surface = 0, dt_bulk = 0;
    double n = 0, paths = 0;
    std::uint64_t seed = 0;
    std::vector<double> lambda_log, lambda_lin;

    app.add_option("command", command, std::string("one of ") + kCommandList);
    app.add_option("form", form, "closed-form name (closed-form command only)");
    app.add_option("--config", config_path, "JSON config file; flags override its keys");
    auto* o_a = app.add_option("--a", a, "ejection distance, 0 < a <= 1");
    auto* o_eps = app.add_option("--eps", eps, "target half-width, 0 <= eps <= pi");
    auto* o_d1 = app.add_option("--d1", d1, "surface diffusion coefficient");
    auto* o_d2 = app.add_option("--d2", d2, "bulk diffusion coefficient");
    auto* o_lambda = app.add_option("--lambda", lambda, "single desorption rate");
    auto* o_llog = app.add_option("--lambda-log", lambda_log, "log-spaced grid MIN MAX COUNT")->expected(3);
    auto* o_llin = app.add_option("--lambda-lin", lambda_lin, "linear grid MIN MAX COUNT")->expected(3);
    auto* o_n = app.add_option("--n", n, "truncation N");
    auto* o_out = app.add_option("--output", output, "output path, '-' for stdout");
    auto* o_fmt = app.add_option("--format", format, "csv or json");
    auto* o_cache = app.add_option("--cache", cache, "operator-matrix cache file");
    auto* o_seed = app.add_option("--seed", seed, "Monte Carlo seed");
    auto* o_paths = app.add_option("--paths", paths, "Monte Carlo path count");
    auto* o_dts = app.add_option("--dt-surface", dt_surface, "surface time step");
    auto* o_dtb = app.add_option("--dt-bulk", dt_bulk, "bulk time step (euler mode)");
    auto* o_mode = app.add_option("--bulk-mode", bulk_mode, "exact-jump or euler");
    auto* o_start = app.add_option("--start", start, "'uniform' or a starting angle");
    app.allow_extras(false);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        throw UsageError(app.help());
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    RunConfig cfg;
    if (!config_path.empty()) apply_config_file(config_path, cfg);
    if (!command.empty()) cfg.command = parse_command(command);
    else if (config_path.empty())
        throw UsageError(std::string("missing command; expected one of ") + kCommandList);
    if (!form.empty()) {
        if (cfg.command != Command::ClosedForm) throw UsageError("unexpected argument '" + form + "'");
        cfg.form = form;
    }
    if (o_a->count()) cfg.params.a = a;
    if (o_eps->count()) cfg.params.epsilon = eps;
    if (o_d1->count()) cfg.params.d1 = d1;
    if (o_d2->count()) cfg.params.d2 = d2;
    if (o_lambda->count()) {
        cfg.params.lambda = lambda;
        cfg.lambda_grid.reset();
    }
    if (o_llog->count() && o_llin->count()) throw UsageError("--lambda-log and --lambda-lin are exclusive");
    if (o_llog->count()) cfg.lambda_grid = make_grid(lambda_log, true, "--lambda-log");
    if (o_llin->count()) cfg.lambda_grid = make_grid(lambda_lin, false, "--lambda-lin");
    if (o_n->count()) cfg.n_trunc = as_count(n, "--n");
    if (o_out->count()) cfg.output_path = output;
    if (o_fmt->count()) cfg.format = parse_format(format);
    if (o_cache->count()) cfg.matrix_cache = cache;
    if (o_seed->count()) cfg.seed = seed;
    if (o_paths->count()) cfg.n_paths = as_count(paths, "--paths");
    if (o_dts->count()) cfg.dt_surface = dt_surface;
    if (o_dtb->count()) cfg.dt_bulk = dt_bulk;
    if (o_mode->count()) cfg.bulk_mode = parse_bulk_mode(bulk_mode);
    if (o_start->count()) cfg.start = parse_start(start);

    validate_params(cfg.params);
    if (cfg.lambda_grid) lambda_values(*cfg.lambda_grid);
    return cfg;
}

Table execute(const RunConfig& cfg) {
    switch (cfg.command) {
        case Command::Solve: return solve(cfg);
        case Command::Spectrum: return spectrum_table(cfg);
        case Command::Limit: return limit_table(cfg);
        case Command::Asymptotics: return asymptotics_table(cfg);
        case Command::ClosedForm: return closed_form_table(cfg);
        case Command::Simulate: return simulate_table(cfg);
        case Command::Compare: return compare_table(cfg);
    }
    throw UsageError("unhandled command");
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_cell(row[i]);
        out += '\n';
    }
    return out;
}

std::string emit_json(const ojson& j) {
    std::string out;
    emit(j, out);
    out += '\n';
    return out;
}

std::string to_json(const RunConfig& cfg, const Table& t) {
    ojson doc;
    doc["command"] = command_name(cfg.command);
    if (cfg.command == Command::ClosedForm) doc["form"] = cfg.form;
    doc["params"] = {{"a", cfg.params.a},
                     {"eps", cfg.params.epsilon},
                     {"d1", cfg.params.d1},
                     {"d2", cfg.params.d2},
                     {"lambda", cfg.params.lambda}};
    doc["n"] = cfg.n_trunc;
    doc["columns"] = t.columns;
    ojson rows = ojson::array();
    for (const auto& r : t.rows) rows.push_back(ojson(r));
    doc["rows"] = std::move(rows);
    return emit_json(doc);
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        const Table t = execute(cfg);
        const std::string text = cfg.format == Format::Json ? to_json(cfg, t) : to_csv(t);
        if (cfg.output_path == "-") {
            out << text;
            out.flush();
            if (!out) throw IoError("failed writing to standard output");
        } else {
            std::ofstream f(cfg.output_path, std::ios::binary | std::ios::trunc);
            if (!f) throw IoError("cannot open output file '" + cfg.output_path + "'");
            f << text;
            f.close();
            if (!f) throw IoError("failed writing output file '" + cfg.output_path + "'");
        }
        return 0;
    } catch (...) {
        return exit_code_for(std::current_exception(), err);
    }
}

int main_with_args(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        cfg = parse_config(args);
    } catch (...) {
        return exit_code_for(std::current_exception(), err);
    }
    return run(cfg, out, err);
}

}  // namespace escape
