#include "labelnoise/cli.hpp"

int main(int argc, char** argv) { return labelnoise::run_cli(argc, argv); }
