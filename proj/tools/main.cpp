#include "loadfc/commands.hpp"

int main(int argc, char** argv) { return loadfc::cli::run(argc, argv); }
