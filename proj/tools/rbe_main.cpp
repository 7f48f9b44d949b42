#include <iostream>

#include "rbe/cli.hpp"

int main(int argc, char** argv)
{
    return rbe::cli_main(argc, argv, std::cout, std::cerr);
}
