#include "daugs/cli.hpp"

int main(int argc, char** argv) { return daugs::cli::dispatch(argc, argv); }
