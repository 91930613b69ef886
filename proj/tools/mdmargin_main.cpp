#include "mdmargin/cli.hpp"

int main(int argc, char** argv) { return mdmargin::run_main(argc, argv); }
