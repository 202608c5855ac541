#include "qmt/cli.hpp"

int main(int argc, char** argv) { return qmt::cli::run(argc, argv); }
