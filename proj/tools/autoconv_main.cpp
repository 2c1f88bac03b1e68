#include "autoconv/cli.hpp"

int main(int argc, char** argv) { return autoconv::run_cli(argc, argv); }
