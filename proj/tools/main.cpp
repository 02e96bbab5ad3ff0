#include "uasflow/cli.hpp"

int main(int argc, char** argv) { return uasflow::run_cli(argc, argv); }
