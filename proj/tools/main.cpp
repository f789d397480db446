#include "afford/cli.hpp"

int main(int argc, char** argv) { return afford::run_cli(argc, argv); }
