#include "occlabel/cli.hpp"

int main(int argc, char** argv) { return occlabel::cli_main(argc, argv); }
