#include "bidrank/cli.hpp"

int main(int argc, char** argv) { return bidrank::parse_and_dispatch(argc, argv); }
