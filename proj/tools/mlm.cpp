#include "cli_app.hpp"

int main(int argc, char** argv) { return mlm::cli::run(argc, argv); }
