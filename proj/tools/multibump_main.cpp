#include "multibump/cli.hpp"

int main(int argc, char** argv) { return multibump::run_cli(argc, argv); }
