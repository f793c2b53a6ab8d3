// Runs the ten acceptance criteria, one line each; exit status 1 if any fails.

#include <cstdio>

#include "thinobs/checks.hpp"

int main()
{
    int failed = 0;
    for (int id = 1; id <= 10; ++id) {
        const auto r = thinobs::run_criterion(id);
        std::printf("%s\n", thinobs::summary_line(r).c_str());
        std::fflush(stdout);
        failed += r.pass() ? 0 : 1;
    }
    std::printf("%d of 10 criteria passed\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
