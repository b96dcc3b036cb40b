#include "cli.hpp"

int main(int argc, char** argv) { return arapdepth::cli::run(argc, argv); }
