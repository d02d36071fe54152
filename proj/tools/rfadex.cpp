#include "rfadex/cli.hpp"

int main(int argc, char** argv) { return rfadex::cli::run(argc, argv); }
