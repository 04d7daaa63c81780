#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "ledgerone/harness.hpp"
#include "ledgerone/md5.hpp"
#include "ledgerone/stats.hpp"

using namespace ledgerone;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "ledgerone_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Independent MD5 via OpenSSL, used as the oracle for the split hash.
std::string openssl_md5_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_md5(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

/// Long-double reference for the Wald half-width with the same fixed
/// critical value the implementation documents.
long double reference_wald(long double successes, int n) {
    const long double z = 1.959964L;
    const long double p = successes / n;
    return z * std::sqrt(p * (1.0L - p) / n);
}

long double reference_z(long double s1, int n1, long double s2, int n2) {
    const long double p1 = s1 / n1;
    const long double p2 = s2 / n2;
    const long double pooled = (s1 + s2) / (static_cast<long double>(n1) + n2);
    const long double se = std::sqrt(pooled * (1.0L - pooled) * (1.0L / n1 + 1.0L / n2));
    return (p1 - p2) / se;
}

TaskManifestEntry entry(const std::string& id, const std::string& answer, const std::string& category = "") {
    TaskManifestEntry e;
    e.task_id = id;
    e.template_id = "tpl_" + id;
    e.prompt = "prompt for " + id;
    e.expected_answer = answer;
    e.category = category;
    return e;
}

TaskRunner fixed_answer_runner(const std::string& answer) {
    return [answer](const TaskManifestEntry& e, const fs::path&) {
        TaskResult r;
        r.final_answer = answer;
        r.transcript = Transcript(e.task_id);
        r.transcript.append(Role::user, "user", e.prompt);
        return r;
    };
}

}  // namespace

TEST_CASE("manifest loading") {
    fs::path dir = fresh_dir("manifest");

    SUBCASE("parses one task per line and skips blanks") {
        std::ofstream out(dir / "tasks.jsonl");
        out << R"({"task_id":"a","prompt":"p1","expected_answer":"1"})" << "\n\n";
        out << R"({"task_id":"b","prompt":"p2","category":"web","attachments":["x.txt"]})" << "\n";
        out.close();
        auto entries = load_manifest(dir / "tasks.jsonl");
        REQUIRE(entries.size() == 2);
        CHECK(entries[0].expected_answer == "1");
        CHECK(entries[1].category == "web");
        CHECK(entries[1].attachments == std::vector<std::string>{"x.txt"});
        CHECK_FALSE(entries[1].expected_answer.has_value());
    }

    SUBCASE("duplicate task ids are rejected") {
        std::ofstream out(dir / "dup.jsonl");
        out << R"({"task_id":"a","prompt":"p"})" << "\n" << R"({"task_id":"a","prompt":"q"})" << "\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_manifest(dir / "dup.jsonl"), doctest::Contains("duplicate"),
                             std::runtime_error);
    }

    SUBCASE("parse errors name the line") {
        std::ofstream out(dir / "bad.jsonl");
        out << R"({"task_id":"a","prompt":"p"})" << "\n" << "{broken\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_manifest(dir / "bad.jsonl"), doctest::Contains("line 2"),
                             std::runtime_error);
    }
}

TEST_CASE("benchmark produces one record per task-repetition") {
    fs::path root = fresh_dir("bench_card");
    std::vector<TaskManifestEntry> entries = {entry("t1", "yes"), entry("t2", "yes"), entry("t3", "no")};
    BenchConfig config{"demo", 2, 2, root};

    BenchmarkResult result =
        run_benchmark(entries, config, fixed_answer_runner("yes"), ScorerRegistry::with_defaults());

    CHECK(result.records.size() == 6);
    std::set<std::pair<std::string, int>> seen;
    for (const auto& r : result.records) {
        seen.insert({r.task_id, r.repetition});
        CHECK(fs::exists(root / "demo" / r.task_id / std::to_string(r.repetition) / "record.json"));
        CHECK(fs::exists(r.transcript_path));
    }
    CHECK(seen.size() == 6);
    CHECK(result.aggregate.n == 6);
    CHECK(result.aggregate.successes == 4);  // t3 expects "no"
}

TEST_CASE("a crash in one task is contained to its own record") {
    fs::path root = fresh_dir("bench_crash");
    std::vector<TaskManifestEntry> entries = {entry("ok", "fine"), entry("boom", "fine")};
    BenchConfig config{"demo", 1, 2, root};

    TaskRunner runner = [](const TaskManifestEntry& e, const fs::path& run_dir) {
        if (e.task_id == "boom") throw std::runtime_error("injected crash");
        return fixed_answer_runner("fine")(e, run_dir);
    };
    BenchmarkResult result = run_benchmark(entries, config, runner, ScorerRegistry::with_defaults());

    REQUIRE(result.records.size() == 2);
    for (const auto& r : result.records) {
        if (r.task_id == "boom") {
            CHECK(r.status == "error");
            CHECK(r.score == 0.0);
            CHECK(fs::exists(root / "demo" / "boom" / "0" / "error.txt"));
        } else {
            CHECK(r.status == "complete");
            CHECK(r.score == 1.0);
        }
    }
}

TEST_CASE("parallel tasks never observe each other's workspaces") {
    fs::path root = fresh_dir("bench_iso");
    std::vector<TaskManifestEntry> entries;
    for (int i = 0; i < 8; ++i) entries.push_back(entry("task" + std::to_string(i), "clean"));
    BenchConfig config{"iso", 1, 4, root};

    TaskRunner runner = [](const TaskManifestEntry& e, const fs::path& run_dir) {
        const fs::path ws = run_dir / "workspace";
        std::ofstream(ws / ("sentinel_" + e.task_id)) << e.task_id;
        // Any file other than our own sentinel means a leak between runs.
        bool clean = true;
        for (const auto& f : fs::directory_iterator(ws)) {
            if (f.path().filename() != "sentinel_" + e.task_id) clean = false;
        }
        TaskResult r;
        r.final_answer = clean ? "clean" : "leaked";
        r.transcript = Transcript(e.task_id);
        r.transcript.append(Role::user, "user", e.prompt);
        return r;
    };

    BenchmarkResult result = run_benchmark(entries, config, runner, ScorerRegistry::with_defaults());
    CHECK(result.aggregate.successes == 8);

    // Re-running starts from a blank slate: old sentinels must be gone.
    BenchmarkResult again = run_benchmark(entries, config, runner, ScorerRegistry::with_defaults());
    CHECK(again.aggregate.successes == 8);
}

TEST_CASE("unregistered scorers are rejected before any task runs") {
    fs::path root = fresh_dir("bench_scorer");
    auto e = entry("t1", "x");
    e.scorer = "made_up";
    CHECK_THROWS_WITH_AS(run_benchmark({e}, {"demo", 1, 1, root}, fixed_answer_runner("x"),
                                       ScorerRegistry::with_defaults()),
                         doctest::Contains("made_up"), std::runtime_error);
}

TEST_CASE("category aggregation partitions the records") {
    std::vector<RunRecord> records;
    for (int i = 0; i < 10; ++i) {
        RunRecord r;
        r.task_id = "t" + std::to_string(i);
        r.category = (i % 2 == 0) ? "web" : "files";
        r.score = (i < 4) ? 1.0 : 0.0;
        records.push_back(r);
    }
    auto by_cat = aggregate_by_category(records);
    REQUIRE(by_cat.count("overall") == 1);
    CHECK(by_cat["web"].n + by_cat["files"].n == by_cat["overall"].n);
    CHECK(by_cat["web"].successes + by_cat["files"].successes == by_cat["overall"].successes);
    CHECK(by_cat["overall"].rate == doctest::Approx(0.4));
}

TEST_CASE("the validation/test split is pure, stable, and matches the MD5 oracle") {
    std::mt19937 rng(11);
    std::vector<TaskManifestEntry> entries;
    for (int i = 0; i < 812; ++i) {
        TaskManifestEntry e;
        e.task_id = "task" + std::to_string(i);
        e.template_id = "template_" + std::to_string(rng());
        e.prompt = "p";
        entries.push_back(e);
    }

    auto [validation, test] = split_validation_test(entries);
    CHECK(validation.size() + test.size() == entries.size());

    std::set<std::string> val_ids;
    for (const auto& e : validation) val_ids.insert(e.task_id);
    for (const auto& e : test) CHECK(val_ids.count(e.task_id) == 0);  // purity

    auto [validation2, test2] = split_validation_test(entries);  // stability
    CHECK(validation2.size() == validation.size());
    for (std::size_t i = 0; i < validation.size(); ++i) {
        CHECK(validation2[i].task_id == validation[i].task_id);
    }

    // Oracle agreement on 100 sampled template ids.
    std::uniform_int_distribution<std::size_t> pick(0, entries.size() - 1);
    for (int i = 0; i < 100; ++i) {
        const auto& e = entries[pick(rng)];
        const std::string ours = md5_hex(e.template_id);
        CHECK(ours == openssl_md5_hex(e.template_id));
        const bool in_validation = val_ids.count(e.task_id) > 0;
        CHECK(in_validation == (ours[0] >= '0' && ours[0] <= '7'));
    }

    SUBCASE("entries without template ids cannot be split") {
        entries[0].template_id.clear();
        CHECK_THROWS_WITH_AS(split_validation_test(entries), doctest::Contains("template_id"),
                             std::runtime_error);
    }
}

TEST_CASE("md5 matches the OpenSSL oracle on assorted inputs") {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> len(0, 300);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int i = 0; i < 200; ++i) {
        std::string s;
        const int n = len(rng);
        for (int j = 0; j < n; ++j) s += static_cast<char>(byte(rng));
        CHECK(md5_hex(s) == openssl_md5_hex(s));
    }
    // Boundary lengths around the 64-byte block size.
    for (int n : {0, 1, 55, 56, 57, 63, 64, 65, 119, 120, 128}) {
        const std::string s(n, 'a');
        CHECK(md5_hex(s) == openssl_md5_hex(s));
    }
}

TEST_CASE("answers are normalized before exact matching") {
    CHECK(score_exact_match("  Bob ", "bob") == 1);
    CHECK(score_exact_match("two   words", "Two Words") == 1);
    CHECK(score_exact_match("bob", "alice") == 0);
    CHECK(normalize_answer("  A\tB\nC ") == "a b c");
}

TEST_CASE("statistics agree with a long-double reference over random draws") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> n_dist(2, 2000);

    for (int i = 0; i < 1000; ++i) {
        const int n = n_dist(rng);
        std::uniform_int_distribution<int> s_dist(0, n);
        const int s = s_dist(rng);
        const double got = wald_interval(s, n);
        const long double want = reference_wald(s, n);
        if (want > 0) {
            CHECK(std::abs(got - static_cast<double>(want)) <= 1e-9 * static_cast<double>(want));
        } else {
            CHECK(got == 0.0);
        }
    }

    for (int i = 0; i < 1000; ++i) {
        const int n1 = n_dist(rng), n2 = n_dist(rng);
        std::uniform_int_distribution<int> s1_dist(0, n1), s2_dist(0, n2);
        const int s1 = s1_dist(rng), s2 = s2_dist(rng);
        const ZTestResult got = two_proportion_z_test(s1, n1, s2, n2);
        if ((s1 == 0 && s2 == 0) || (s1 == n1 && s2 == n2)) {
            CHECK(got.z == 0.0);
            CHECK_FALSE(got.significant);
        } else {
            const long double want = reference_z(s1, n1, s2, n2);
            CHECK(std::abs(got.z - static_cast<double>(want)) <=
                  1e-9 * std::max(1.0, std::abs(static_cast<double>(want))));
            CHECK(got.significant == (std::abs(got.z) > 1.959964));
        }
    }
}

TEST_CASE("interval edge cases") {
    CHECK_THROWS_AS(wald_interval(1, 0), std::invalid_argument);
    CHECK_THROWS_AS(wald_interval(-1, 10), std::invalid_argument);
    CHECK_THROWS_AS(wald_interval(11, 10), std::invalid_argument);
    CHECK(wald_interval(0, 50) == 0.0);
    CHECK(wald_interval(50, 50) == 0.0);
    // A non-default confidence exercises the quantile approximation.
    const double hw90 = wald_interval(30, 100, 0.90);
    const double z90 = 1.6448536269514722;
    CHECK(hw90 == doctest::Approx(z90 * std::sqrt(0.3 * 0.7 / 100)).epsilon(1e-9));
}

TEST_CASE("capability names map to agent capability tags") {
    CHECK(map_capability("Web Browser") == "web-browsing");
    CHECK(map_capability("search engine") == "web-browsing");
    CHECK(map_capability("PYTHON") == "coding");
    CHECK(map_capability("calculator") == "coding");
    CHECK(map_capability("pdf viewer") == "file-handling");
    CHECK(map_capability("csv file access") == "file-handling");
    CHECK(map_capability("image recognition") == "none");
    CHECK(map_capability("ocr") == "none");
    CHECK(map_capability("quantum widget") == "unmapped");
}

TEST_CASE("run records round-trip through json") {
    RunRecord r;
    r.task_id = "t9";
    r.repetition = 2;
    r.final_answer = "42";
    r.score = 1.0;
    r.status = "complete";
    r.wall_time_s = 1.25;
    r.usage.prompt_units = 10;
    r.usage.completion_units = 3;
    r.category = "web";
    RunRecord back = RunRecord::from_json(r.to_json());
    CHECK(back.to_json().dump() == r.to_json().dump());
}
