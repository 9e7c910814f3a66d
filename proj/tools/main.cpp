#include <string>
#include <vector>

#include "vground/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vground::cli_main(args);
}
