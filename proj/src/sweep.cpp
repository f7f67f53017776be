#include "fracmp/sweep.hpp"

#include "fracmp/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace fracmp {

Problem<double> Instance::problem(double lambda) const { return make_problem(grid, kernel, V, lambda, nl); }

Instance build_instance(const Config& cfg) {
    require_valid(cfg);
    Instance inst;
    inst.cfg = cfg;
    inst.grid = build_grid(cfg.a, cfg.b, Eigen::Index(cfg.n));
    inst.kernel = std::make_shared<const Kernel<double>>(assemble_kernel(inst.grid, cfg.s, cfg.p));
    inst.nl = make_nonlinearity(cfg.q, cfg.f0, cfg.p, cfg.s, cfg.theta);
    if (cfg.V_file.empty()) {
        inst.V = constant_potential(inst.grid.n, cfg.V);
    } else {
        const auto f = read_gridfn(cfg.V_file);
        if (f.n != inst.grid.n)
            throw ConfigError("V_file has n = " + std::to_string(f.n) + ", config has n = " + std::to_string(cfg.n));
        const double tol = 1e-12 * std::max(1.0, std::abs(cfg.b - cfg.a));
        if (std::abs(f.a - cfg.a) > tol || std::abs(f.b - cfg.b) > tol)
            throw ConfigError("V_file interval differs from the config interval");
        inst.V = Potential<double>{f.values};
    }
    EigenOptions eo;
    eo.tol = cfg.tol_eigen;
    eo.cap_factor = cfg.eigen_cap_factor;
    inst.eigen = first_eigenpair(*inst.kernel, inst.grid, eo);
    require_valid(cfg, inst.eigen.lambda1);
    return inst;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 finalizer over the pair
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

GeometryConstants<double> instance_constants(const Instance& inst) {
    return certify_constants(inst.problem(1.0), inst.eigen.phi1);
}

SolveOutcome solve_at(const Instance& inst, const GeometryConstants<double>& gc, double lambda, std::uint64_t seed) {
    const Config& cfg = inst.cfg;
    const Problem<double> prob = inst.problem(lambda);
    const Endpoints<double> ep = construct_endpoints(prob, inst.eigen.phi1, gc);

    SolveOutcome out;
    out.lambda = lambda;
    out.below_hat1 = ep.below_hat1;
    out.below_hat2 = ep.below_hat2;
    out.e1_energy = energy(ep.e1, prob);

    MountainPassOptions mo;
    mo.segments = cfg.path_segments;
    out.mountain = mountain_pass(prob, ep.e0, ep.e1, cfg.tol_mp, mo).point;
    out.ring_floor = ring_floor(prob, gc);
    out.above_ring = out.mountain.value >= out.ring_floor;

    SecondSolutionOptions so;
    so.random_starts = cfg.second_starts;
    so.seed = seed;
    so.descend.classify.seed = derive_seed(seed, 1);
    out.second = find_second_solution(prob, out.mountain, cfg.tol_solve, so);

    out.positive = positivity_check(out.mountain.u, prob.grid, prob.s()).all_positive;
    out.distinct_count = 1;
    if (out.second) {
        out.positive = out.positive && positivity_check(out.second->u, prob.grid, prob.s()).all_positive;
        ++out.distinct_count;
    }
    return out;
}

PowerFit fit_powerlaw(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw UsageError("fit_powerlaw: need at least 2 points");
    const double m = double(points.size());
    double sx = 0, sy = 0;
    for (const auto& [x, y] : points) {
        if (!(x > 0) || !(y > 0) || !std::isfinite(x) || !std::isfinite(y))
            throw UsageError("fit_powerlaw: lambda and value must be positive and finite");
        sx += std::log(x);
        sy += std::log(y);
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& [x, y] : points) {
        const double dx = std::log(x) - mx, dy = std::log(y) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0)) throw UsageError("fit_powerlaw: all lambda values coincide");
    PowerFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (syy > 0) {
        double sse = 0;
        for (const auto& [x, y] : points) {
            const double e = std::log(y) - (f.intercept + f.slope * std::log(x));
            sse += e * e;
        }
        f.r2 = std::clamp(1.0 - sse / syy, 0.0, 1.0);
    } else {
        f.r2 = 1.0;
    }
    return f;
}

FitSummary fit_records(const std::vector<SweepRecord>& records, double r, double p) {
    std::vector<std::pair<double, double>> inf, w, e;
    for (const auto& rec : records) {
        if (!rec.ok()) continue;
        inf.emplace_back(rec.lambda, rec.norm_inf);
        w.emplace_back(rec.lambda, rec.norm_W);
        e.emplace_back(rec.lambda, rec.energy);
    }
    if (inf.size() < 4)
        throw UsageError("fit needs at least 4 successful points, have " + std::to_string(inf.size()));
    FitSummary fs;
    fs.norm_inf = fit_powerlaw(inf);
    fs.norm_W = fit_powerlaw(w);
    fs.energy = fit_powerlaw(e);
    fs.target_inf = -r;
    fs.target_W = -r;
    fs.target_energy = -r * p;
    fs.points = int(inf.size());
    return fs;
}

SweepResult sweep(const Instance& inst) {
    const Config& cfg = inst.cfg;
    SweepResult res;
    res.lambda1 = inst.eigen.lambda1;
    res.constants = instance_constants(inst);
    const double l3 = res.constants.lambda3();
    if (cfg.lambda_relative && !std::isfinite(l3))
        throw ConfigError("lambda3 is infinite; use lambda_unit = absolute");

    const std::vector<double> lambdas = lambda_list(cfg, l3);
    if (lambdas.size() < 4) throw ConfigError("sweep: need at least 4 lambda values for a fit");
    const auto [lo, hi] = std::minmax_element(lambdas.begin(), lambdas.end());
    if (!(*hi / *lo >= 10.0 * (1 - 1e-9))) throw ConfigError("sweep: lambda values must span at least one decade");

    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        SweepRecord rec;
        rec.lambda = lambdas[k];
        rec.below_hat1 = rec.lambda < res.constants.lambda_hat1;
        rec.below_hat2 = rec.lambda < res.constants.lambda_hat2;
        try {
            const SolveOutcome so = solve_at(inst, res.constants, rec.lambda, derive_seed(cfg.seed, k));
            rec.norm_W = wnorm(so.mountain.u, *inst.kernel);
            rec.norm_inf = so.mountain.u.lpNorm<Eigen::Infinity>();
            rec.energy = so.mountain.value;
            rec.residual = so.mountain.residual;
            rec.positive = so.positive;
            rec.distinct_count = so.distinct_count;
        } catch (const Error& e) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            rec.norm_W = rec.norm_inf = rec.energy = rec.residual = nan;
            rec.error = e.what();
            std::replace(rec.error.begin(), rec.error.end(), '\n', ' ');
        }
        res.records.push_back(std::move(rec));
    }

    const Problem<double> prob = inst.problem(1.0);
    try {
        res.fit = fit_records(res.records, prob.r(), prob.p());
    } catch (const UsageError& e) {
        res.fit_error = e.what();
    }
    return res;
}

SweepResult sweep(const Config& cfg) { return sweep(build_instance(cfg)); }

std::string render_csv(const std::vector<SweepRecord>& records) {
    std::ostringstream o;
    o << kCsvHeader << '\n';
    for (const auto& r : records) {
        o << format_double(r.lambda) << ',' << format_double(r.norm_W) << ',' << format_double(r.norm_inf) << ','
          << format_double(r.energy) << ',' << format_double(r.residual) << ',' << (r.positive ? 1 : 0) << ','
          << r.distinct_count << ',' << (r.in_window() ? 1 : 0) << '\n';
    }
    for (std::size_t k = 0; k < records.size(); ++k)
        if (!records[k].ok()) o << "# error " << k << ": " << records[k].error << '\n';
    return o.str();
}

namespace {

using nlohmann::json;

json num_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double num_from(const json& j, const char* key) {
    const json& v = j.at(key);
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

json fit_json(const PowerFit& f, double target) {
    return json{{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"target", target}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing", path);
    out << text;
    if (!out) throw IoError("write failed", path);
}

}  // namespace

std::string render_json(const std::vector<SweepRecord>& records, const std::optional<FitSummary>& fit) {
    json arr = json::array();
    for (const auto& r : records) {
        json j{{"lambda", num_or_null(r.lambda)},
               {"norm_W", num_or_null(r.norm_W)},
               {"norm_inf", num_or_null(r.norm_inf)},
               {"energy", num_or_null(r.energy)},
               {"residual", num_or_null(r.residual)},
               {"positive", r.positive},
               {"distinct_count", r.distinct_count},
               {"in_window", r.in_window()},
               {"below_lambda_hat1", r.below_hat1},
               {"below_lambda_hat2", r.below_hat2}};
        if (!r.ok()) j["error"] = r.error;
        arr.push_back(std::move(j));
    }
    json doc{{"records", std::move(arr)}};
    if (fit)
        doc["fit"] = json{{"points", fit->points},
                          {"norm_inf", fit_json(fit->norm_inf, fit->target_inf)},
                          {"norm_W", fit_json(fit->norm_W, fit->target_W)},
                          {"energy", fit_json(fit->energy, fit->target_energy)}};
    return doc.dump(2) + "\n";
}

void export_records(const std::vector<SweepRecord>& records, const std::string& format, const std::string& path,
                    const std::optional<FitSummary>& fit) {
    if (format == "csv") write_text(path, render_csv(records));
    else if (format == "json") write_text(path, render_json(records, fit));
    else throw UsageError("export: unknown format '" + format + "'");
}

std::vector<SweepRecord> parse_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw IoError("missing or wrong CSV header", origin);
    std::vector<SweepRecord> out;
    std::vector<std::pair<std::size_t, std::string>> errors;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string tag = "# error ";
            if (line.rfind(tag, 0) == 0) {
                const auto colon = line.find(": ", tag.size());
                if (colon == std::string::npos) throw IoError("bad error comment '" + line + "'", origin);
                errors.emplace_back(std::stoul(line.substr(tag.size(), colon - tag.size())), line.substr(colon + 2));
            }
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 8) throw IoError("expected 8 CSV fields in '" + line + "'", origin);
        SweepRecord r;
        try {
            r.lambda = std::stod(f[0]);
            r.norm_W = std::stod(f[1]);
            r.norm_inf = std::stod(f[2]);
            r.energy = std::stod(f[3]);
            r.residual = std::stod(f[4]);
            r.positive = std::stoi(f[5]) != 0;
            r.distinct_count = std::stoi(f[6]);
            r.below_hat1 = r.below_hat2 = std::stoi(f[7]) != 0;
        } catch (const std::exception&) {
            throw IoError("bad CSV row '" + line + "'", origin);
        }
        out.push_back(std::move(r));
    }
    for (auto& [k, msg] : errors) {
        if (k >= out.size()) throw IoError("error comment for missing row " + std::to_string(k), origin);
        out[k].error = msg;
    }
    return out;
}

std::vector<SweepRecord> parse_json(const std::string& text, const std::string& origin) {
    std::vector<SweepRecord> out;
    try {
        const json doc = json::parse(text);
        for (const auto& j : doc.at("records")) {
            SweepRecord r;
            r.lambda = num_from(j, "lambda");
            r.norm_W = num_from(j, "norm_W");
            r.norm_inf = num_from(j, "norm_inf");
            r.energy = num_from(j, "energy");
            r.residual = num_from(j, "residual");
            r.positive = j.at("positive").get<bool>();
            r.distinct_count = j.at("distinct_count").get<int>();
            r.below_hat1 = j.at("below_lambda_hat1").get<bool>();
            r.below_hat2 = j.at("below_lambda_hat2").get<bool>();
            if (j.contains("error")) r.error = j.at("error").get<std::string>();
            out.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("bad JSON records (") + e.what() + ")", origin);
    }
    return out;
}

std::vector<SweepRecord> read_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading", path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') return parse_json(text, path);
    return parse_csv(text, path);
}

}  // namespace fracmp
