#include <iostream>
#include <string>
#include <vector>

#include "foldsimplex/cli.hpp"

int main(int argc, char** argv) {
    return foldsimplex::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
