#include "dbfilm/cli.hpp"

int main(int argc, char** argv) { return dbfilm::cli::main(argc, argv); }
