#include "cli.hpp"

int main(int argc, char** argv) { return rainsim::run_cli(argc, argv); }
