#include "cli.hpp"

int main(int argc, char** argv) { return slowfast::cli::cli_main(argc, argv); }
