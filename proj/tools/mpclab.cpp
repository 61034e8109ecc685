#include "mpclab/cli.hpp"

int main(int argc, char** argv) { return mpclab::run_cli(argc, argv); }
