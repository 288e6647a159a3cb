#include "kmt/cli.hpp"

int main(int argc, char** argv) { return kmt::cli::run_command(argc, argv); }
