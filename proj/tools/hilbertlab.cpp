#include "hilbertlab/cli/app.hpp"

int main(int argc, char** argv) { return hilbertlab::cli::run(argc, argv); }
