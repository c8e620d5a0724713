#include "fraclab/cli.hpp"

int main(int argc, char** argv) { return fraclab::run_cli(argc, argv); }
