#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "icl_ttc/acceptance.hpp"

using namespace icl_ttc;

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite: one pass/fail line per criterion"};
    std::vector<int> criteria;
    std::string scale = "full";
    std::size_t threads = 0;
    std::uint64_t seed = 0;
    app.add_option("--criterion", criteria, "Criterion number (repeatable); default all");
    app.add_option("--scale", scale, "full or quick")->check(CLI::IsMember({"full", "quick"}));
    app.add_option("--threads", threads, "Worker threads");
    app.add_option("--seed", seed, "Master seed");
    CLI11_PARSE(app, argc, argv);
    if (criteria.empty()) criteria = all_criteria();

    int failed = 0;
    for (int id : criteria) {
        const CriterionResult r =
            run_criterion(id, scale == "full" ? ValidateScale::full : ValidateScale::quick, threads, seed);
        std::cout << format_criterion(r) << std::endl;
        if (!r.passed) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
