#include "ledgerone/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "ledgerone/errors.hpp"

namespace ledgerone {

namespace {

const ResponseSchema kPostmortemSchema{
    "postmortem",
    {{"root_cause", SchemaField::Type::string},
     {"contributing_factors", SchemaField::Type::array},
     {"outcome", SchemaField::Type::string}}};

const ResponseSchema kInitialCodesSchema{"initial_codes", {{"codes", SchemaField::Type::array}}};

const ResponseSchema kConsolidationSchema{"code_consolidation", {{"merges", SchemaField::Type::array}}};

const ResponseSchema kApplyCodesSchema{"apply_codes", {{"codes", SchemaField::Type::array}}};

std::vector<std::string> string_list(const nlohmann::json& arr) {
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (v.is_string()) out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

std::string kebab_case(const std::string& s) {
    std::string out;
    bool pending_dash = false;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            if (pending_dash && !out.empty()) out += '-';
            pending_dash = false;
            out += static_cast<char>(std::tolower(c));
        } else {
            pending_dash = true;
        }
    }
    return out;
}

const ErrorCode* CodeBook::find(const std::string& label) const {
    for (const auto& c : codes) {
        if (c.label == label) return &c;
    }
    return nullptr;
}

nlohmann::json CodeBook::to_json() const {
    nlohmann::json codes_json = nlohmann::json::array();
    for (const auto& c : codes) {
        codes_json.push_back({{"definition", c.definition}, {"examples", c.examples}, {"label", c.label}});
    }
    return {{"codes", codes_json},
            {"iteration", iteration},
            {"merge_map", merge_map},
            {"stable", stable}};
}

CodeBook CodeBook::from_json(const nlohmann::json& j) {
    CodeBook book;
    std::set<std::string> seen;
    for (const auto& cj : j.at("codes")) {
        ErrorCode c;
        c.label = cj.at("label").get<std::string>();
        c.definition = cj.value("definition", "");
        c.examples = string_list(cj.value("examples", nlohmann::json::array()));
        if (!seen.insert(c.label).second) {
            throw std::runtime_error("duplicate code label in codebook: " + c.label);
        }
        book.codes.push_back(std::move(c));
    }
    book.iteration = j.value("iteration", 0);
    book.stable = j.value("stable", false);
    if (j.contains("merge_map")) {
        for (const auto& [from, into] : j.at("merge_map").items()) {
            book.merge_map[from] = into.get<std::string>();
        }
    }
    return book;
}

CodeBook CodeBook::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open codebook: " + path.string());
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

void CodeBook::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    out << to_json().dump(2) << "\n";
}

Postmortem distill_postmortem(const std::string& task_id, const std::string& transcript_text,
                              const std::string& run_status, CompletionClient& client,
                              CallRecorder* recorder) {
    Postmortem pm;
    pm.task_id = task_id;
    pm.outcome = (run_status == "complete") ? "success" : "failure";

    if (transcript_text.empty()) {
        pm.root_cause = "UNANALYZED";
        return pm;
    }

    std::string prompt =
        "Distill this run log into a postmortem: identify the root cause of failure (or the main "
        "inefficiency, even on success) along with any contributing factors.\nRun status: " + run_status +
        "\nLog:\n" + transcript_text;
    try {
        nlohmann::json obj = complete_structured(
            client, {ChatMessage::text(Role::user, "analyst", prompt)}, kPostmortemSchema, recorder);
        pm.root_cause = obj.at("root_cause").get<std::string>();
        pm.contributing_factors = string_list(obj.at("contributing_factors"));
        const std::string outcome = obj.at("outcome").get<std::string>();
        if (outcome == "success" || outcome == "failure") pm.outcome = outcome;
        if (pm.root_cause.empty()) pm.root_cause = "UNANALYZED";
    } catch (const SchemaError&) {
        pm.root_cause = "UNANALYZED";
    }
    return pm;
}

std::vector<ErrorCode> assign_initial_codes(const Postmortem& pm, CompletionClient& client,
                                            CallRecorder* recorder) {
    std::string prompt = "Assign 1-5 short descriptive codes (labels) to this postmortem.\nRoot cause: " +
                         pm.root_cause + "\nContributing factors:\n";
    for (const auto& f : pm.contributing_factors) prompt += "  - " + f + "\n";

    std::vector<ErrorCode> out;
    for (int attempt = 0; attempt < 2 && out.empty(); ++attempt) {
        nlohmann::json obj;
        try {
            obj = complete_structured(client, {ChatMessage::text(Role::user, "analyst", prompt)},
                                      kInitialCodesSchema, recorder);
        } catch (const SchemaError&) {
            break;
        }
        std::set<std::string> seen;
        for (const auto& cj : obj.at("codes")) {
            ErrorCode c;
            if (cj.is_string()) {
                c.label = kebab_case(cj.get<std::string>());
            } else if (cj.is_object()) {
                c.label = kebab_case(cj.value("label", ""));
                c.definition = cj.value("definition", "");
            }
            if (c.label.empty() || !seen.insert(c.label).second) continue;
            out.push_back(std::move(c));
            if (out.size() == 5) break;
        }
    }
    if (out.empty()) {
        out.push_back(ErrorCode{"uncoded", "no code could be assigned", {}});
    }
    return out;
}

CodeBook consolidate_codes(const std::vector<ErrorCode>& codes, CompletionClient& client,
                           const ConsolidationConfig& config, CallRecorder* recorder) {
    if (codes.empty()) throw std::invalid_argument("consolidate_codes needs at least one code");

    CodeBook book;
    std::set<std::string> seen;
    for (const auto& c : codes) {
        book.merge_map[c.label] = c.label;  // identity until merged
        if (seen.insert(c.label).second) book.codes.push_back(c);
    }

    for (int pass = 0; pass < config.max_iterations; ++pass) {
        book.iteration = pass + 1;

        std::vector<std::size_t> order(book.codes.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::mt19937 rng(config.seed + static_cast<unsigned>(pass));
        std::shuffle(order.begin(), order.end(), rng);

        int accepted_merges = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::set<std::string> batch_labels;
            std::string prompt = "Merge similar codes in this batch into a more consolidated set. "
                                 "Reply with merge pairs {from, into}; both must be batch members.\n";
            for (std::size_t k = start; k < end; ++k) {
                const auto& c = book.codes[order[k]];
                batch_labels.insert(c.label);
                prompt += "  - " + c.label + ": " + c.definition + "\n";
            }

            nlohmann::json obj;
            try {
                obj = complete_structured(client, {ChatMessage::text(Role::user, "analyst", prompt)},
                                          kConsolidationSchema, recorder);
            } catch (const SchemaError&) {
                continue;  // a failed batch leaves its codes untouched this pass
            }

            for (const auto& mj : obj.at("merges")) {
                if (!mj.is_object()) continue;
                const std::string from = mj.value("from", "");
                const std::string into = mj.value("into", "");
                // Merge targets outside the batch are rejected, not applied.
                if (from == into || !batch_labels.count(from) || !batch_labels.count(into)) continue;
                if (!book.find(from) || !book.find(into)) continue;

                book.codes.erase(std::remove_if(book.codes.begin(), book.codes.end(),
                                                [&](const ErrorCode& c) { return c.label == from; }),
                                 book.codes.end());
                for (auto& [orig, target] : book.merge_map) {
                    if (target == from) target = into;
                }
                ++accepted_merges;
            }
        }

        if (accepted_merges == 0) {
            book.stable = true;
            break;
        }
        // Pending merges at the iteration cap leave stable == false.
    }
    return book;
}

std::vector<CodeAssignment> apply_codebook(const CodeBook& book, const std::vector<Postmortem>& postmortems,
                                           CompletionClient& client, CallRecorder* recorder) {
    std::string book_listing = "Codebook:\n";
    for (const auto& c : book.codes) book_listing += "  - " + c.label + ": " + c.definition + "\n";

    std::vector<CodeAssignment> out;
    for (const auto& pm : postmortems) {
        CodeAssignment a;
        a.task_id = pm.task_id;
        a.benchmark = pm.benchmark;
        a.variant = pm.variant;

        std::string prompt = "Assign codes from the codebook to this postmortem. Use only listed labels.\n" +
                             book_listing + "Root cause: " + pm.root_cause + "\n";
        try {
            nlohmann::json obj = complete_structured(
                client, {ChatMessage::text(Role::user, "analyst", prompt)}, kApplyCodesSchema, recorder);
            std::set<std::string> seen;
            for (const auto& label_raw : string_list(obj.at("codes"))) {
                std::string label = kebab_case(label_raw);
                if (!book.find(label)) {
                    auto it = book.merge_map.find(label);
                    label = (it != book.merge_map.end() && book.find(it->second)) ? it->second : "uncoded";
                }
                if (seen.insert(label).second) a.codes.push_back(label);
            }
        } catch (const SchemaError&) {
            // fall through to uncoded
        }
        if (a.codes.empty()) a.codes.push_back("uncoded");
        out.push_back(std::move(a));
    }
    return out;
}

AnalysisTables emit_analysis_tables(const std::vector<CodeAssignment>& assignments) {
    AnalysisTables tables;
    std::set<std::string> columns;
    for (const auto& a : assignments) {
        const std::string col = a.benchmark + (a.variant.empty() ? "" : ":" + a.variant);
        columns.insert(col);
        for (const auto& code : a.codes) {
            tables.distribution_counts[code] += 1;
            tables.heatmap_counts[code][col] += 1;
        }
    }

    // Codes sorted by occurrence (descending), label as the tiebreaker.
    std::vector<std::pair<std::string, int>> ordered(tables.distribution_counts.begin(),
                                                     tables.distribution_counts.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::ostringstream dist;
    dist << "code,count\n";
    for (const auto& [code, count] : ordered) dist << code << "," << count << "\n";
    tables.distribution = dist.str();

    std::ostringstream heat;
    heat << "code";
    for (const auto& col : columns) heat << "\t" << col;
    heat << "\n";
    for (const auto& [code, count] : ordered) {
        heat << code;
        for (const auto& col : columns) {
            const auto& row = tables.heatmap_counts[code];
            const auto it = row.find(col);
            heat << "\t" << (it == row.end() ? 0 : it->second);
        }
        heat << "\n";
    }
    tables.heatmap = heat.str();
    return tables;
}

}  // namespace ledgerone
