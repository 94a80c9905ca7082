#include <iostream>

#include "tvss/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tvss::dispatch(args, std::cout, std::cerr);
}
