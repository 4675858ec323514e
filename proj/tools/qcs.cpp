#include "qcs/cli.hpp"

int main(int argc, char** argv) { return qcs::cli::run(argc, argv); }
