#include "fkdyn/commands.hpp"

int main(int argc, char** argv) { return fk::run_cli(argc, argv); }
