#include "commands.hpp"

int main(int argc, char** argv) { return epicli::run_cli(argc, argv); }
