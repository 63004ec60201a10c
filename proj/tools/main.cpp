#include "dscw/cli.hpp"

int main(int argc, char** argv) { return dscw::parse_and_dispatch(argc, argv); }
