#include "flipline/cli/run.hpp"

int main(int argc, char** argv) { return flipline::cli::main_entry(argc, argv); }
