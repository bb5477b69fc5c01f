#include <iostream>
#include <string>
#include <vector>

#include "signaffect/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return signaffect::run_cli(args, std::cout, std::cerr);
}
