#include "moscap/cli.hpp"

int main(int argc, char** argv) { return moscap::cli::main(argc, argv); }
