#include <iostream>
#include <string>
#include <vector>

#include "mvpi/cli.hpp"

int main(int argc, char** argv) {
    return mvpi::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
