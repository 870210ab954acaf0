#include <ammlab/cli.hpp>

#include <iostream>

int main(int argc, char** argv) { return ammlab::run_cli(argc, argv, std::cout, std::cerr); }
