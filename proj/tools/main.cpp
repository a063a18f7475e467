#include "fnd/cli.hpp"

int main(int argc, char** argv) { return fnd::run_cli(argc, argv); }
