#include "bluth/cli.hpp"

int main(int argc, char** argv) { return bluth::cli::run(argc, argv); }
