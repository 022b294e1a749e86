#include "sdwb/cli.hpp"

int main(int argc, char** argv) { return sdwb::run_cli(argc, argv); }
