#include "stochfet/cli.hpp"

int main(int argc, char** argv) { return stochfet::cli_main(argc, argv); }
