#pragma once

#include <string>
#include <vector>

namespace ledgerone {

/// Normalized string equality: trim, case-fold, collapse internal
/// whitespace. Returns 1 on match, 0 otherwise.
int score_exact_match(const std::string& answer, const std::string& expected);

std::string normalize_answer(const std::string& s);

/// Wald normal-approximation half width z * sqrt(p(1-p)/n) at 95%
/// confidence (z = 1.959964). Throws on n == 0.
double wald_interval(double successes, int n, double confidence = 0.95);

struct ZTestResult {
    double z = 0.0;
    bool significant = false;  // |z| > z_{1 - alpha/2}
};

/// Pooled two-proportion z-test. Degenerate pooled proportions (0 or 1)
/// yield z = 0: no evidence of a difference.
ZTestResult two_proportion_z_test(double s1, int n1, double s2, int n2, double alpha = 0.05);

/// Maps an annotated tool/capability name to one of web-browsing, coding,
/// file-handling, none; unknown tools map to "unmapped".
std::string map_capability(const std::string& annotated_tool);

}  // namespace ledgerone
