#include "moco/cli.hpp"

int main(int argc, char** argv) { return moco::run_cli(argc, argv); }
