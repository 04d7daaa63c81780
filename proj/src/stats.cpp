#include "ledgerone/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ledgerone {

namespace {

/// Acklam's rational approximation to the standard normal quantile.
double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("quantile probability must be in (0,1)");

    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};

    const double p_low = 0.02425;
    double q, r, x;
    if (p < p_low) {
        q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (p <= 1 - p_low) {
        q = p - 0.5;
        r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        q = std::sqrt(-2 * std::log(1 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    // One Halley refinement step against erfc.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
    x = x - u / (1 + x * u / 2);
    return x;
}

}  // namespace

std::string normalize_answer(const std::string& s) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += static_cast<char>(std::tolower(c));
        }
    }
    return out;
}

int score_exact_match(const std::string& answer, const std::string& expected) {
    return normalize_answer(answer) == normalize_answer(expected) ? 1 : 0;
}

double wald_interval(double successes, int n, double confidence) {
    if (n <= 0) throw std::invalid_argument("wald_interval: n must be positive");
    if (successes < 0 || successes > n) throw std::invalid_argument("wald_interval: successes out of range");
    const double z = (confidence == 0.95) ? 1.959964 : normal_quantile(0.5 + confidence / 2.0);
    const double p = successes / n;
    return z * std::sqrt(p * (1.0 - p) / n);
}

ZTestResult two_proportion_z_test(double s1, int n1, double s2, int n2, double alpha) {
    if (n1 <= 0 || n2 <= 0) throw std::invalid_argument("two_proportion_z_test: sample sizes must be positive");
    const double p1 = s1 / n1;
    const double p2 = s2 / n2;
    const double pooled = (s1 + s2) / (static_cast<double>(n1) + n2);

    ZTestResult result;
    if (pooled <= 0.0 || pooled >= 1.0) {
        result.z = 0.0;  // no evidence of a difference
        result.significant = false;
        return result;
    }
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
    result.z = (p1 - p2) / se;
    const double critical = (alpha == 0.05) ? 1.959964 : normal_quantile(1.0 - alpha / 2.0);
    result.significant = std::abs(result.z) > critical;
    return result;
}

std::string map_capability(const std::string& annotated_tool) {
    static const std::map<std::string, std::string> table = {
        // web browsing
        {"web browser", "web-browsing"},
        {"search engine", "web-browsing"},
        {"maps", "web-browsing"},
        {"access to internet archives", "web-browsing"},
        // coding and execution
        {"coding", "coding"},
        {"python", "coding"},
        {"calculator", "coding"},
        {"audio/video processing", "coding"},
        {"text processing", "coding"},
        {"natural language processing", "coding"},
        // diverse file types
        {"pdf viewer", "file-handling"},
        {"word", "file-handling"},
        {"excel", "file-handling"},
        {"powerpoint file access", "file-handling"},
        {"csv file access", "file-handling"},
        {"xml file access", "file-handling"},
        // performed inherently by multimodal agents, no tool needed
        {"image recognition", "none"},
        {"ocr", "none"},
        {"computer vision", "none"},
        {"color recognition", "none"},
        {"extracting text from images", "none"},
    };
    const auto it = table.find(normalize_answer(annotated_tool));
    return it == table.end() ? "unmapped" : it->second;
}

}  // namespace ledgerone
