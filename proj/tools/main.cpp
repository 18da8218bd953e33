#include "tpn2f/cli.hpp"

int main(int argc, char** argv) { return tpn2f::run_cli(argc, argv); }
