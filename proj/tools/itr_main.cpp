#include "itr/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return itr::run_cli(argc, argv, std::cout, std::cerr);
}
