#include "maskfe/cli.hpp"

int main(int argc, char** argv) { return maskfe::cli::run(argc, argv); }
