#include "cli.hpp"

int main(int argc, char** argv) { return nosignal::cli::dispatch(argc, argv); }
