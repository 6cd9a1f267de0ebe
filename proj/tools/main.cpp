#include "plctopo/cli.hpp"

int main(int argc, char** argv) { return plctopo::cli_main(argc, argv); }
