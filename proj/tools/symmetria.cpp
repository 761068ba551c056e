#include "commands.hpp"

int main(int argc, char** argv) { return symmetria::cli::run(argc, argv); }
