#pragma once

#include "fracmp/core.hpp"
#include "fracmp/grid.hpp"

#include <string>

namespace fracmp {

/// Grid function text format:
///
///     # fracmp gridfn n=<n> a=<a> b=<b>
///     <value>
///     ...            (exactly n lines, 17 significant digits)
struct GridFunctionFile {
    Eigen::VectorXd values;
    Eigen::Index n = 0;
    double a = 0;
    double b = 0;
};

void write_gridfn(const std::string& path, const Eigen::VectorXd& u, const Grid<double>& grid);
GridFunctionFile read_gridfn(const std::string& path);

/// Parses the format from memory; `origin` names the source in error messages.
GridFunctionFile parse_gridfn(const std::string& text, const std::string& origin);

/// %.17g
std::string format_double(double x);

}  // namespace fracmp
