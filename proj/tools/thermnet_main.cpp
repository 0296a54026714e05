#include "thermnet/cli.hpp"

int main(int argc, char** argv) { return thermnet::cli::run(argc, argv); }
