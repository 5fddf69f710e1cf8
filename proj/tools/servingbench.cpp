#include "servingbench/cli.hpp"

int main(int argc, char** argv) { return servingbench::cli::run_cli(argc, argv); }
