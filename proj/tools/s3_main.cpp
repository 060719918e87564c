#include "s3/cli.hpp"

int main(int argc, char** argv) { return s3::cli::run(argc, argv); }
