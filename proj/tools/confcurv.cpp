#include <confcurv/cli.hpp>

int main(int argc, char** argv) { return confcurv::cli::run(argc, argv); }
