#include <iostream>

#include "occrisk/cli.hpp"

int main(int argc, char** argv) {
    return occrisk::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
