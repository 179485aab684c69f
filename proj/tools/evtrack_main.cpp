#include <cstdio>

int main() {
    std::fprintf(stderr, "evtrack: no subcommand\n");
    return 2;
}
