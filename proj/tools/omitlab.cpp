#include "omitlab/cli.hpp"

int main(int argc, char** argv) { return omitlab::cli::run(argc, argv); }
