#pragma once

#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "coach/agents.hpp"
#include "coach/domain.hpp"
#include "coach/errors.hpp"

namespace coach {

enum class AnswerKind { StrokeName, Count };

/// Parses the core answer out of free text: the first stroke-vocabulary term
/// (synonym-normalized to the canonical token) or the first number.
inline std::string extract_core_answer(const std::string& text, AnswerKind kind) {
    std::string lower = to_lower(text);
    if (kind == AnswerKind::StrokeName) {
        auto type = find_stroke_type_in_text(lower);
        if (!type) throw NoAnswerFound();
        return to_string(*type);
    }
    static const std::regex number(
        "\\b(\\d+|zero|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|"
        "thirteen|fourteen|fifteen|sixteen|seventeen|eighteen|nineteen|twenty)\\b");
    std::smatch m;
    if (!std::regex_search(lower, m, number)) throw NoAnswerFound();
    auto value = detail::number_token_value(m[1].str());
    if (!value) throw NoAnswerFound();
    return std::to_string(*value);
}

inline int exact_match(const std::string& pred_token, const std::string& gold_token) {
    return pred_token == gold_token ? 1 : 0;
}

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Set precision/recall/F1. Conventions: both empty -> (1,1,1);
/// exactly one empty -> (0,0,0).
inline Prf stroke_prf(const std::set<int>& pred, const std::set<int>& gold) {
    if (pred.empty() && gold.empty()) return {1.0, 1.0, 1.0};
    if (pred.empty() || gold.empty()) return {0.0, 0.0, 0.0};
    int inter = 0;
    for (int i : pred)
        if (gold.count(i)) ++inter;
    Prf out;
    out.precision = static_cast<double>(inter) / static_cast<double>(pred.size());
    out.recall = static_cast<double>(inter) / static_cast<double>(gold.size());
    out.f1 = (out.precision + out.recall) > 0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

/// 1 iff the first reported stroke is in gold; the empty/empty case counts as
/// a hit, aligned with the NQA convention.
inline int hit_at_1(const std::vector<int>& pred_ordered, const std::set<int>& gold) {
    if (pred_ordered.empty()) return gold.empty() ? 1 : 0;
    return gold.count(pred_ordered.front()) ? 1 : 0;
}

struct EvalRecord {
    Query query;
    std::string prediction_text;
    std::optional<std::vector<int>> predicted_strokes;  // ordered; parsed from text when absent
};

inline void to_json(json& j, const EvalRecord& r) {
    j = json{{"query_id", r.query.query_id}, {"prediction_text", r.prediction_text}};
    if (r.predicted_strokes) j["predicted_strokes"] = *r.predicted_strokes;
}

/// Ordered predicted strokes for a record; unparseable reports degrade to the
/// empty set rather than crashing the aggregation.
inline std::vector<int> predicted_strokes_of(const EvalRecord& record) {
    if (record.predicted_strokes) return *record.predicted_strokes;
    try {
        return parse_grounder_order(record.prediction_text);
    } catch (const UnparseableReport&) {
        return {};
    }
}

/// Fraction of negative-query records answered with the empty set.
inline double nqa(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw EmptyCohort();
    int correct = 0;
    for (const auto& record : records) {
        if (!record.query.gold_strokes || !record.query.gold_strokes->empty())
            throw CoachError("nqa cohort contains a non-negative query: " +
                             record.query.query_id);
        if (predicted_strokes_of(record).empty()) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

namespace detail {

inline std::vector<std::string> rouge_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '_') {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline int lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<int> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace detail

/// Token-level ROUGE-L F (beta = 1). Both sides empty -> 1.0; one empty -> 0.0.
inline double rouge_l(const std::string& prediction, const std::string& reference) {
    auto pred = detail::rouge_tokens(prediction);
    auto ref = detail::rouge_tokens(reference);
    if (pred.empty() && ref.empty()) return 1.0;
    if (pred.empty() || ref.empty()) return 0.0;
    int lcs = detail::lcs_length(pred, ref);
    if (lcs == 0) return 0.0;
    double p = static_cast<double>(lcs) / static_cast<double>(pred.size());
    double r = static_cast<double>(lcs) / static_cast<double>(ref.size());
    return 2.0 * p * r / (p + r);
}

struct CategoryReport {
    int count = 0;
    std::optional<double> em_pct;
    std::optional<double> hit1_pct;
    std::optional<double> precision_pct;
    std::optional<double> recall_pct;
    std::optional<double> f1_pct;
    std::optional<double> nqa_pct;
    std::optional<double> rouge_l;  // reported x100
};

struct MetricsReport {
    std::map<QueryCategory, CategoryReport> per_category;
    std::string notes =
        "hit@1 = first-reported-stroke membership in the gold set; the empty-prediction/"
        "empty-gold case counts as a hit (convention aligned with NQA)";
};

/// Half-up rounding to 2 decimals, matching table formatting.
inline double round2(double pct) { return std::floor(pct * 100.0 + 0.5) / 100.0; }

inline MetricsReport aggregate(std::vector<EvalRecord> records) {
    std::sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
        return a.query.query_id < b.query.query_id;
    });

    struct Acc {
        int count = 0;
        double em = 0, hit1 = 0, p = 0, r = 0, f1 = 0, rouge = 0;
        int neg_count = 0, neg_empty = 0;
        bool localization = false, text_overlap = false, token_em = false;
    };
    std::map<QueryCategory, Acc> accs;

    for (const auto& record : records) {
        Acc& acc = accs[record.query.category];
        ++acc.count;
        switch (record.query.category) {
            case QueryCategory::ActionClassification:
            case QueryCategory::ActionCount: {
                acc.token_em = true;
                AnswerKind kind = record.query.category == QueryCategory::ActionClassification
                                      ? AnswerKind::StrokeName
                                      : AnswerKind::Count;
                int em = 0;
                try {
                    std::string pred = extract_core_answer(record.prediction_text, kind);
                    std::string gold =
                        extract_core_answer(record.query.gold_answer.value_or(""), kind);
                    em = exact_match(pred, gold);
                } catch (const NoAnswerFound&) {
                    em = 0;
                }
                acc.em += em;
                break;
            }
            case QueryCategory::TemporalLocalization:
            case QueryCategory::HighlightRequest: {
                acc.localization = true;
                auto ordered = predicted_strokes_of(record);
                std::set<int> pred(ordered.begin(), ordered.end());
                std::set<int> gold = record.query.gold_strokes.value_or(std::set<int>{});
                acc.em += pred == gold ? 1 : 0;
                acc.hit1 += hit_at_1(ordered, gold);
                Prf prf = stroke_prf(pred, gold);
                acc.p += prf.precision;
                acc.r += prf.recall;
                acc.f1 += prf.f1;
                if (gold.empty()) {
                    ++acc.neg_count;
                    if (pred.empty()) ++acc.neg_empty;
                }
                break;
            }
            case QueryCategory::Summarisation:
            case QueryCategory::KnowledgeQA: {
                acc.text_overlap = true;
                acc.rouge +=
                    rouge_l(record.prediction_text, record.query.gold_answer.value_or(""));
                break;
            }
        }
    }

    MetricsReport report;
    for (const auto& [category, acc] : accs) {
        CategoryReport row;
        row.count = acc.count;
        double n = static_cast<double>(acc.count);
        if (acc.token_em || acc.localization) row.em_pct = round2(acc.em / n * 100.0);
        if (acc.localization) {
            row.hit1_pct = round2(acc.hit1 / n * 100.0);
            row.precision_pct = round2(acc.p / n * 100.0);
            row.recall_pct = round2(acc.r / n * 100.0);
            row.f1_pct = round2(acc.f1 / n * 100.0);
            if (acc.neg_count > 0)
                row.nqa_pct = round2(static_cast<double>(acc.neg_empty) /
                                     static_cast<double>(acc.neg_count) * 100.0);
        }
        if (acc.text_overlap) row.rouge_l = round2(acc.rouge / n * 100.0);
        report.per_category[category] = row;
    }
    return report;
}

inline void to_json(json& j, const CategoryReport& r) {
    j = json{{"count", r.count}};
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    put("em_pct", r.em_pct);
    put("hit1_pct", r.hit1_pct);
    put("precision_pct", r.precision_pct);
    put("recall_pct", r.recall_pct);
    put("f1_pct", r.f1_pct);
    put("nqa_pct", r.nqa_pct);
    put("rouge_l", r.rouge_l);
}

inline void to_json(json& j, const MetricsReport& r) {
    json categories = json::object();
    for (const auto& [category, row] : r.per_category)
        categories[to_string(category)] = row;
    j = json{{"per_category", categories}, {"notes", r.notes}};
}

/// Fixed-width text report, one row per category.
inline std::string render_table(const MetricsReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << std::left << std::setw(24) << "Category" << std::right << std::setw(8) << "N"
        << std::setw(10) << "EM" << std::setw(10) << "hit@1" << std::setw(10) << "P"
        << std::setw(10) << "R" << std::setw(10) << "F1" << std::setw(10) << "NQA"
        << std::setw(10) << "ROUGE-L" << "\n";
    auto cell = [&](const std::optional<double>& v) {
        std::ostringstream c;
        if (v) c << std::fixed << std::setprecision(2) << *v;
        else c << "-";
        return c.str();
    };
    for (const auto& [category, row] : report.per_category) {
        out << std::left << std::setw(24) << to_string(category) << std::right << std::setw(8)
            << row.count << std::setw(10) << cell(row.em_pct) << std::setw(10)
            << cell(row.hit1_pct) << std::setw(10) << cell(row.precision_pct) << std::setw(10)
            << cell(row.recall_pct) << std::setw(10) << cell(row.f1_pct) << std::setw(10)
            << cell(row.nqa_pct) << std::setw(10) << cell(row.rouge_l) << "\n";
    }
    return out.str();
}

}  // namespace coach
