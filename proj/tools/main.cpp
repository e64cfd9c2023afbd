#include "cli.hpp"

int main(int argc, char** argv) { return ocrbench::cli::run(argc, argv); }
