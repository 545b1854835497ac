#include <vector>
#include <string>

#include "dop/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dop::run_cli(args);
}
