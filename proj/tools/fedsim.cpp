#include "fedsim/cli.hpp"

int main(int argc, char** argv) {
    return fedsim::run_cli(argc, argv);
}
