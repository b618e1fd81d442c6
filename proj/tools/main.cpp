#include <iostream>

#include "inline_snspd/cli.hpp"

int main(int argc, char** argv)
{
    return inline_snspd::cli::run(argc, argv, std::cout, std::cerr);
}
