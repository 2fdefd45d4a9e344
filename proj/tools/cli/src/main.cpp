// SPDX-License-Identifier: Apache-2.0
#include "vice/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vice::cli::run(args, std::cout, std::cerr);
}
