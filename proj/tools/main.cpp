#include "welsch_cli.hpp"

int main(int argc, char** argv) { return welsch::cli_main(argc, argv); }
