#include "pasnet/cli.hpp"

int main(int argc, char** argv) { return pasnet::cli::dispatch(argc, argv); }
