#include "cli.hpp"

int main(int argc, char** argv) { return kgflow::cli::run(argc, argv); }
