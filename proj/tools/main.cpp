#include <iostream>
#include <string>
#include <vector>

#include "sqm/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return sqm::cli::main_entry(args, std::cout, std::cerr);
}
