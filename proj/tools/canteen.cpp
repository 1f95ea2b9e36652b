#include "canteen/cli.hpp"

int main(int argc, char** argv) { return canteen::cli::main(argc, argv); }
