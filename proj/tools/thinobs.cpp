#include <iostream>

#include "thinobs/cli.hpp"

int main(int argc, char** argv)
{
    return thinobs::run_cli(argc, argv, std::cout, std::cerr);
}
