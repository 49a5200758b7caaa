#include "quant/cli.hpp"

int main(int argc, char** argv) { return quant::cli::run(argc, argv); }
