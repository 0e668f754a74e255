#include "pottsmix/harness.hpp"

int main(int argc, char** argv) { return pottsmix::cli_main(argc, argv); }
