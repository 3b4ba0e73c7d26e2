#include <iostream>
#include <string>
#include <vector>

#include "fgb/cli/commands.hpp"

int main(int argc, char** argv) {
    return fgb::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
