#include <cmenet/cli.hpp>

#include <iostream>

int main(int argc, char** argv) {
    return cmenet::run_cli(argc, argv, std::cout, std::cerr);
}
