// Acceptance gate: runs every criterion and prints one pass/fail line each.
// Exit code = number of failed criteria.

#include <cstdio>
#include <cstring>

#include "vslab/verify.hpp"

int main(int argc, char** argv) {
    std::string suite = "all";
    std::string outdir = "acceptance_out";
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--suite") == 0 && i + 1 < argc) suite = argv[++i];
        if (std::strcmp(argv[i], "--outdir") == 0 && i + 1 < argc) outdir = argv[++i];
    }

    int failed = 0;
    try {
        const auto results = vslab::run_acceptance_suite(suite, outdir);
        double total = 0;
        for (const auto& r : results) {
            std::printf("[%s] criterion %2d %-36s %s (%.1fs)\n", r.pass ? "PASS" : "FAIL", r.id,
                        r.name.c_str(), r.detail.c_str(), r.seconds);
            std::fflush(stdout);
            if (!r.pass) ++failed;
            total += r.seconds;
        }
        std::printf("acceptance: %zu criteria, %d failed, %.1fs total\n", results.size(), failed, total);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
        return 99;
    }
    return failed;
}
