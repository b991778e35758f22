// Regenerates the committed test fixtures: qbrain_make_fixtures <dir>
#include <cstdio>
#include <exception>

#include "qbrain/fixtures.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <fixture-dir>\n", argv[0]);
        return 2;
    }
    try {
        qbrain::write_fixture_set(argv[1]);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    std::printf("fixtures written to %s\n", argv[1]);
    return 0;
}
