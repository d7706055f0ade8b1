#include "vinestep/cli.hpp"

int main(int argc, char** argv) { return vinestep::run_cli(argc, argv); }
