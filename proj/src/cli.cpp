#include "fracmp/cli.hpp"

#include "fracmp/io.hpp"
#include "fracmp/sweep.hpp"
#include "fracmp/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace fracmp::cli {

namespace {

using nlohmann::json;

struct Common {
    std::string config;
    std::string out;
    std::string format;
    std::optional<std::uint64_t> seed;
    std::string ref;
};

Config load_with_overrides(const Common& c) {
    Config cfg = load_config(c.config);
    if (!c.out.empty()) cfg.out = c.out;
    if (!c.format.empty()) cfg.format = c.format;
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

std::string prepare_out(const Config& cfg) {
    if (cfg.out.empty()) return {};
    std::error_code ec;
    std::filesystem::create_directories(cfg.out, ec);
    if (ec || !std::filesystem::is_directory(cfg.out)) throw IoError("cannot create output directory", cfg.out);
    return cfg.out;
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing", path);
    f << text;
    if (!f) throw IoError("write failed", path);
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json point_json(const CriticalPoint<double>& cp, const Instance& inst) {
    return json{{"value", number(cp.value)},
                {"residual", number(cp.residual)},
                {"tag", to_string(cp.tag)},
                {"iterations", cp.iterations},
                {"norm_W", number(wnorm(cp.u, *inst.kernel))},
                {"norm_inf", number(cp.u.lpNorm<Eigen::Infinity>())},
                {"positive", positivity_check(cp.u, inst.grid, inst.cfg.s).all_positive}};
}

void emit(std::ostream& out, const std::string& dir, const std::string& name, const json& report) {
    const std::string text = report.dump(2) + "\n";
    out << text;
    if (!dir.empty()) write_text(join(dir, name), text);
}

int cmd_eigen(const Common& c, std::ostream& out) {
    const Instance inst = build_instance(load_with_overrides(c));
    const std::string dir = prepare_out(inst.cfg);
    json report{{"command", "eigen"},
                {"lambda1", inst.eigen.lambda1},
                {"residual", inst.eigen.residual},
                {"iterations", inst.eigen.iterations}};
    emit(out, dir, "eigen.json", report);
    if (!dir.empty()) write_gridfn(join(dir, "phi1.gridfn"), inst.eigen.phi1, inst.grid);
    return Ok;
}

int cmd_torsion(const Common& c, std::ostream& out) {
    const Instance inst = build_instance(load_with_overrides(c));
    const std::string dir = prepare_out(inst.cfg);
    TorsionOptions to;
    to.tol = inst.cfg.tol_torsion;
    to.cap_factor = inst.cfg.torsion_cap_factor;
    const auto t = torsion_solve(*inst.kernel, inst.grid, inst.V, to, 1.0, std::optional<double>(inst.eigen.lambda1));
    json report{{"command", "torsion"},
                {"residual", t.residual},
                {"iterations", t.iterations},
                {"positive", t.positive},
                {"min", t.u.minCoeff()},
                {"max", t.u.maxCoeff()}};
    emit(out, dir, "torsion.json", report);
    if (!dir.empty()) write_gridfn(join(dir, "torsion.gridfn"), t.u, inst.grid);
    return t.positive ? Ok : Failed;
}

int cmd_solve(const Common& c, std::ostream& out) {
    const Instance inst = build_instance(load_with_overrides(c));
    const std::string dir = prepare_out(inst.cfg);
    std::optional<GridFunctionFile> ref;
    if (!c.ref.empty()) {
        ref = read_gridfn(c.ref);
        if (ref->n != inst.grid.n) throw ConfigError("reference solution has n = " + std::to_string(ref->n));
    }
    const auto gc = instance_constants(inst);
    const double l3 = gc.lambda3();
    if (inst.cfg.lambda_relative && !std::isfinite(l3))
        throw ConfigError("lambda3 is infinite; use lambda_unit = absolute");
    const double lambda = lambda_list(inst.cfg, l3).front();
    const SolveOutcome so = solve_at(inst, gc, lambda, derive_seed(inst.cfg.seed, 0));

    json report{{"command", "solve"},
                {"lambda", lambda},
                {"lambda1", inst.eigen.lambda1},
                {"lambda_hat1", number(gc.lambda_hat1)},
                {"lambda_hat2", number(gc.lambda_hat2)},
                {"below_lambda_hat1", so.below_hat1},
                {"below_lambda_hat2", so.below_hat2},
                {"endpoint_energy", so.e1_energy},
                {"ring_floor", so.ring_floor},
                {"above_ring_floor", so.above_ring},
                {"mountain_pass", point_json(so.mountain, inst)},
                {"second", so.second ? point_json(*so.second, inst) : json(nullptr)},
                {"distinct_count", so.distinct_count},
                {"positive", so.positive}};
    if (ref) {
        json d{{"mountain_pass", distinct(so.mountain.u, ref->values)}};
        if (so.second) d["second"] = distinct(so.second->u, ref->values);
        report["distinct_from_reference"] = d;
    }
    emit(out, dir, "solve.json", report);
    if (!dir.empty()) {
        write_gridfn(join(dir, "mountain_pass.gridfn"), so.mountain.u, inst.grid);
        if (so.second) write_gridfn(join(dir, "second.gridfn"), so.second->u, inst.grid);
    }
    return Ok;
}

std::string fit_text(const SweepResult& res) {
    if (!res.fit) return "fit: " + res.fit_error + "\n";
    std::ostringstream o;
    auto line = [&](const char* name, const PowerFit& f, double target) {
        o << "fit " << name << ": slope " << f.slope << " (target " << target << "), R^2 " << f.r2 << '\n';
    };
    line("norm_inf", res.fit->norm_inf, res.fit->target_inf);
    line("norm_W", res.fit->norm_W, res.fit->target_W);
    line("energy", res.fit->energy, res.fit->target_energy);
    return o.str();
}

int cmd_sweep(const Common& c, std::ostream& out, std::ostream& err) {
    const Config cfg = load_with_overrides(c);
    if (cfg.format != "csv" && cfg.format != "json") throw ConfigError("format must be csv or json");
    const Instance inst = build_instance(cfg);
    const std::string dir = prepare_out(cfg);
    const SweepResult res = sweep(inst);
    const std::string table = cfg.format == "csv" ? render_csv(res.records) : render_json(res.records, res.fit);
    if (dir.empty()) {
        out << table;
        err << fit_text(res);
    } else {
        write_text(join(dir, "sweep." + cfg.format), table);
        out << fit_text(res);
    }
    const bool any_ok = std::any_of(res.records.begin(), res.records.end(), [](const auto& r) { return r.ok(); });
    return any_ok ? Ok : Failed;
}

int cmd_verify(const Common& c, std::ostream& out) {
    const auto checks = verify(load_with_overrides(c));
    int failed = 0;
    for (const auto& ch : checks) {
        out << (ch.passed ? "PASS " : "FAIL ") << ch.name << ": " << ch.detail << '\n';
        failed += !ch.passed;
    }
    out << (checks.size() - failed) << "/" << checks.size() << " checks passed\n";
    return failed ? Failed : Ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fractional p-Laplacian solver and verification harness", "fracmp"};
    app.require_subcommand(1);
    Common c;
    auto add = [&](const char* name, const char* help, bool with_ref = false) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("config", c.config, "configuration file")->required();
        sub->add_option("--out", c.out, "output directory");
        sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--seed", c.seed, "base seed");
        if (with_ref) sub->add_option("--ref", c.ref, "reference solution (grid function file)");
        return sub;
    };
    CLI::App* eigen = add("eigen", "first eigenpair");
    CLI::App* torsion = add("torsion", "torsion problem");
    CLI::App* solve = add("solve", "critical points at one lambda", true);
    CLI::App* sweep_cmd = add("sweep", "lambda sweep with power-law fits");
    CLI::App* verify_cmd = add("verify", "invariant suite");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return Ok;
    } catch (const CLI::ParseError& e) {
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << "fracmp: " << e.what() << "\n" << sub->help();
        return BadConfig;
    }

    try {
        if (eigen->parsed()) return cmd_eigen(c, out);
        if (torsion->parsed()) return cmd_torsion(c, out);
        if (solve->parsed()) return cmd_solve(c, out);
        if (sweep_cmd->parsed()) return cmd_sweep(c, out, err);
        if (verify_cmd->parsed()) return cmd_verify(c, out);
    } catch (const IoError& e) {
        err << "fracmp: " << e.what() << '\n';
        return IoFailure;
    } catch (const SolverError& e) {
        err << "fracmp: " << e.what() << " after " << e.iterations() << " iterations\n";
        return Failed;
    } catch (const Error& e) {
        err << "fracmp: " << e.what() << '\n';
        return BadConfig;
    }
    return BadConfig;
}

}  // namespace fracmp::cli
