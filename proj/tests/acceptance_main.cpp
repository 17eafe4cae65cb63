#include <cstdio>

#include "acceptance.hpp"

int main() {
    bool all = true;
    const auto outcomes =
        fbmtk::run_acceptance({}, [](const fbmtk::CriterionOutcome& c) {
            std::printf("c%02d %-7s %-24s %s (%.1fs)\n", c.id,
                        fbmtk::to_string(c.status), c.name.c_str(),
                        c.detail.c_str(), c.seconds);
            std::fflush(stdout);
        });
    for (const auto& c : outcomes)
        all = all && c.status == fbmtk::SuiteStatus::Pass;
    std::printf("%zu criteria, %s\n", outcomes.size(),
                all ? "all passed" : "NOT all passed");
    return all ? 0 : 1;
}
