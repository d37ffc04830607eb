#include "rmscope/cli.hpp"

int main(int argc, char** argv) { return rmscope::run(argc, argv); }
