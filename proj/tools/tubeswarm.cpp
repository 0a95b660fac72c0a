#include <tubeswarm/cli.hpp>

int main(int argc, char** argv) { return tubeswarm::cli::main(argc, argv); }
