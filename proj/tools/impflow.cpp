#include "impflow/cli.hpp"

int main(int argc, char** argv) { return impflow::cli::run(argc, argv); }
