#include <iostream>

#include "shapr/cli.hpp"

int main(int argc, char** argv) {
    return shapr::cli::run(argc, argv, std::cout, std::cerr);
}
