#include <iostream>

#include "cwm/pipeline/cli.hpp"

int main(int argc, char** argv) { return cwm::cli_main(argc, argv, std::cout, std::cerr); }
