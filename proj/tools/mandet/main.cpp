#include "mandet/cli.hpp"

int main(int argc, char** argv) { return mandet::cli::run(argc, argv); }
