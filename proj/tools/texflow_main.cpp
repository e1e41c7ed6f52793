#include "texflow/cli.hpp"

int main(int argc, char** argv) { return texflow::run_cli(argc, argv); }
