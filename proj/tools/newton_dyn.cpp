#include <iostream>
#include <string>
#include <vector>

#include "newton_dyn/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return newton_dyn::cli::run(args, std::cout, std::cerr);
}
