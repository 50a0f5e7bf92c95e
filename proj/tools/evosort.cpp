#include "evosort/cli.hpp"

int main(int argc, char** argv) { return evosort::run_cli(argc, argv); }
