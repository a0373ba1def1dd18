#include <iostream>

#include "polarsim/app.hpp"

int main(int argc, char** argv) { return polarsim::run_cli(argc, argv, std::cout, std::cerr); }
