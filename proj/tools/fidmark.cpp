#include "commands.hpp"

int main(int argc, char** argv) { return fidmark::cli::run(argc, argv); }
