#include "fracmp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return fracmp::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
