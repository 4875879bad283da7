#include <iostream>

#include "qpe/cli.hpp"

int main(int argc, char** argv) { return qpe::cli::run(argc, argv, std::cout, std::cerr); }
