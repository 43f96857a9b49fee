#include <iostream>
#include <string>
#include <vector>

#include "franklin/cli_runner.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return franklin::run(args, std::cout, std::cerr);
}
