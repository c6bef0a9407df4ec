#include "commands.hpp"

int main(int argc, char** argv) { return curigs::cli::run(argc, argv); }
