#include "fracmp/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace fracmp {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_gridfn(const std::string& path, const Eigen::VectorXd& u, const Grid<double>& grid) {
    detail::require_same_size(u.size(), grid.n, "write_gridfn");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing", path);
    out << "# fracmp gridfn n=" << grid.n << " a=" << format_double(grid.a) << " b=" << format_double(grid.b)
        << '\n';
    for (Eigen::Index i = 0; i < u.size(); ++i) out << format_double(u[i]) << '\n';
    if (!out) throw IoError("write failed", path);
}

GridFunctionFile parse_gridfn(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) throw IoError("empty grid function file", origin);

    GridFunctionFile f;
    long long n = -1;
    {
        std::istringstream hs(header);
        std::string hash, tag, kind;
        hs >> hash >> tag >> kind;
        if (hash != "#" || tag != "fracmp" || kind != "gridfn") throw IoError("bad grid function header", origin);
        std::string field;
        bool have_a = false, have_b = false;
        while (hs >> field) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) throw IoError("bad header field '" + field + "'", origin);
            const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
            try {
                if (key == "n") n = std::stoll(val);
                else if (key == "a") f.a = std::stod(val), have_a = true;
                else if (key == "b") f.b = std::stod(val), have_b = true;
            } catch (const std::exception&) {
                throw IoError("bad header value '" + field + "'", origin);
            }
        }
        if (n < 1 || !have_a || !have_b) throw IoError("header needs n, a and b", origin);
    }

    std::vector<double> vals;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(line, &used);
        } catch (const std::exception&) {
            throw IoError("bad value line '" + line + "'", origin);
        }
        if (line.find_first_not_of(" \t\r", used) != std::string::npos || !std::isfinite(v))
            throw IoError("bad value line '" + line + "'", origin);
        vals.push_back(v);
    }
    if (static_cast<long long>(vals.size()) != n)
        throw IoError("expected " + std::to_string(n) + " values, found " + std::to_string(vals.size()), origin);
    f.n = n;
    f.values = Eigen::Map<Eigen::VectorXd>(vals.data(), Eigen::Index(vals.size()));
    return f;
}

GridFunctionFile read_gridfn(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading", path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_gridfn(ss.str(), path);
}

}  // namespace fracmp
