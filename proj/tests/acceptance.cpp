#include "strip/experiments.hpp"

#include <cstring>
#include <iostream>

// Acceptance gate: runs the full-scale validation battery and prints one
// pass/fail line per criterion.  Exit code 0 only when every criterion holds
// at its stated tolerance.

int main(int argc, char** argv) {
    auto level = strip::experiments::ValidateLevel::Full;
    std::uint64_t seed = 424242;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--fast") == 0) level = strip::experiments::ValidateLevel::Fast;
        if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) seed = std::strtoull(argv[++i], nullptr, 10);
    }
    const auto table = strip::experiments::validate_suite(level, seed);
    std::cout << strip::experiments::to_string(table);
    return table.all_pass() ? 0 : 2;
}
