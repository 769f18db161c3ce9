#include "cli.hpp"

int main(int argc, char** argv) { return ravenx::cli::run({argv + 1, argv + argc}); }
