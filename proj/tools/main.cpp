#include "cli.hpp"

int main(int argc, char** argv) { return storymovie::cli::run(argc, argv); }
