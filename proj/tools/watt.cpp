#include "watt/cli/app.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return watt::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
