#include "exitq/cli/commands.hpp"

#include <iostream>

int main(int argc, char **argv)
{
    return exitq::cli::run(argc, argv, std::cout, std::cerr);
}
