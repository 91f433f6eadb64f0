#include "glsm/cli.hpp"

int main(int argc, char** argv) { return glsm::cli::run(argc, argv); }
