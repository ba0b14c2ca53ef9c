#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icl_ttc/config.hpp"

namespace icl_ttc {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    std::vector<std::string> details;
    double seconds = 0.0;
};

std::vector<int> all_criteria();

std::string criterion_title(int id);

// Quick scale shrinks sample counts for smoke runs; full scale uses the sizes
// stated by each criterion.
CriterionResult run_criterion(int id, ValidateScale scale, std::size_t threads, std::uint64_t seed = 0);

// One line: "criterion <id> PASS|FAIL <title> (<seconds>s): <details>".
std::string format_criterion(const CriterionResult& result);

}  // namespace icl_ttc
