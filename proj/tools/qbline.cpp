#include "qbline/cli.hpp"

int main(int argc, char** argv) { return qbline::cli::run(argc, argv); }
