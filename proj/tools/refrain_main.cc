#include "refrain/cli.h"

int main(int argc, char** argv) { return refrain::cli_main(argc, argv); }
