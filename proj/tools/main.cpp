#include "rnncomp/app/commands.hpp"

int main(int argc, char** argv) { return rnncomp::app::run_cli(argc, argv); }
