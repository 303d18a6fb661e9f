#pragma once

#include <istream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coach/domain.hpp"
#include "coach/errors.hpp"

namespace coach {

inline constexpr const char* kAnnotationHeader =
    "match_id,rally_id,stroke_index,time_s,player,stroke_type,court_zone";

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace detail

inline std::vector<StrokeAnnotation> parse_annotations(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw MissingHeader();
    if (detail::strip_cr(line) != kAnnotationHeader) throw MissingHeader();

    std::vector<StrokeAnnotation> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto cols = detail::split_csv_line(line);
        if (cols.size() != 7)
            throw MalformedRow(line_no, "expected 7 columns, got " + std::to_string(cols.size()));
        StrokeAnnotation s;
        s.match_id = cols[0];
        s.rally_id = cols[1];
        try {
            s.stroke_index = std::stoi(cols[2]);
        } catch (const std::exception&) {
            throw MalformedRow(line_no, "stroke_index is not an integer: " + cols[2]);
        }
        if (s.stroke_index < 1) throw MalformedRow(line_no, "stroke_index must be >= 1");
        try {
            s.time_s = std::stod(cols[3]);
        } catch (const std::exception&) {
            throw MalformedRow(line_no, "time_s is not a number: " + cols[3]);
        }
        if (s.time_s < 0.0) throw MalformedRow(line_no, "time_s must be non-negative");
        try {
            s.player = player_from_string(cols[4]);
        } catch (const CoachError&) {
            throw MalformedRow(line_no, "unknown player: " + cols[4]);
        }
        try {
            s.stroke_type = stroke_type_from_string(cols[5]);
        } catch (const CoachError&) {
            throw MalformedRow(line_no, "unknown stroke_type: " + cols[5]);
        }
        try {
            s.court_zone = court_zone_from_string(cols[6]);
        } catch (const CoachError&) {
            throw MalformedRow(line_no, "unknown court_zone: " + cols[6]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline std::string encode_annotations(const std::vector<StrokeAnnotation>& annotations) {
    std::ostringstream out;
    out << kAnnotationHeader << "\n";
    for (const auto& s : annotations) {
        out << s.match_id << ',' << s.rally_id << ',' << s.stroke_index << ','
            << json(s.time_s).dump() << ','
            << to_string(s.player) << ',' << to_string(s.stroke_type) << ','
            << to_string(s.court_zone) << "\n";
    }
    return out.str();
}

/// Groups validated annotations into rallies ordered by first stroke time.
/// video_duration_s is the last stroke time plus a 5 s tail.
inline MatchRecord build_match(const std::vector<StrokeAnnotation>& annotations) {
    MatchRecord match;
    if (annotations.empty()) return match;
    match.match_id = annotations.front().match_id;

    std::map<std::string, Rally> by_rally;
    for (const auto& s : annotations) {
        if (s.match_id != match.match_id)
            throw InvariantViolation("annotations span multiple matches: " + match.match_id +
                                     " vs " + s.match_id);
        auto& rally = by_rally[s.rally_id];
        rally.match_id = s.match_id;
        rally.rally_id = s.rally_id;
        rally.strokes.push_back(s);
    }

    for (auto& [id, rally] : by_rally) {
        std::sort(rally.strokes.begin(), rally.strokes.end(),
                  [](const auto& a, const auto& b) { return a.stroke_index < b.stroke_index; });
        auto violations = validate_rally(rally);
        if (!violations.empty())
            throw InvariantViolation("rally " + id + ": " + violations.front());
        match.rallies.push_back(rally);
    }
    std::sort(match.rallies.begin(), match.rallies.end(), [](const Rally& a, const Rally& b) {
        return a.strokes.front().time_s < b.strokes.front().time_s;
    });
    match.video_duration_s = match.rallies.back().strokes.back().time_s + 5.0;

    auto violations = validate_match(match);
    if (!violations.empty()) throw InvariantViolation(violations.front());
    return match;
}

namespace detail {

inline std::string article_for(const std::string& phrase) {
    if (phrase.empty()) return "a";
    switch (phrase.front()) {
        case 'a': case 'e': case 'i': case 'o': case 'u': return "an";
        default: return "a";
    }
}

inline std::string pluralize(const std::string& phrase) {
    if (phrase.size() >= 2) {
        auto tail = phrase.substr(phrase.size() - 2);
        if (tail == "sh" || tail == "ch") return phrase + "es";
    }
    if (!phrase.empty() && phrase.back() == 's') return phrase + "es";
    return phrase + "s";
}

inline std::string player_word(Player p) { return p == Player::Top ? "upper" : "lower"; }

}  // namespace detail

inline std::string caption_stroke(const StrokeAnnotation& s) {
    std::string phrase = stroke_type_phrase(s.stroke_type);
    return "Stroke " + std::to_string(s.stroke_index) + ": the " + detail::player_word(s.player) +
           " player plays " + detail::article_for(phrase) + " " + phrase + " from the " +
           to_string(s.court_zone.depth) + " " + to_string(s.court_zone.lane) + ".";
}

/// Deterministic dense caption: one sentence per stroke, in index order.
inline std::string caption_rally(const Rally& rally) {
    std::string out;
    for (const auto& s : rally.strokes) {
        if (!out.empty()) out += " ";
        out += caption_stroke(s);
    }
    return out;
}

struct SyntheticQA {
    Query query;
    std::string cot_rationale;
    std::pair<std::string, std::string> source_rally;  // (match_id, rally_id)
};

inline void to_json(json& j, const SyntheticQA& q) {
    j = json(q.query);
    j["cot_rationale"] = q.cot_rationale;
    j["source_rally"] = json{{"match_id", q.source_rally.first},
                             {"rally_id", q.source_rally.second}};
}

inline void from_json(const json& j, SyntheticQA& q) {
    q.query = j.get<Query>();
    j.at("cot_rationale").get_to(q.cot_rationale);
    q.source_rally = {j.at("source_rally").at("match_id").get<std::string>(),
                      j.at("source_rally").at("rally_id").get<std::string>()};
}

/// Seeded template-based QA generation with gold labels computed exactly from
/// the rally annotations. negative_ratio applies to TemporalLocalization only.
inline SyntheticQA synthesize_qa(const Rally& rally, QueryCategory category,
                                 std::uint64_t rng_seed, double negative_ratio = 0.2) {
    std::mt19937_64 rng(rng_seed);
    const int n = static_cast<int>(rally.strokes.size());

    SyntheticQA out;
    out.source_rally = {rally.match_id, rally.rally_id};
    Query& q = out.query;
    q.category = category;
    q.rally_ref = out.source_rally;
    q.query_id = rally.match_id + "_" + rally.rally_id + "_" + to_string(category) + "_" +
                 std::to_string(rng_seed);

    auto types_present = [&] {
        std::vector<StrokeType> present;
        for (StrokeType t : all_stroke_types()) {
            for (const auto& s : rally.strokes)
                if (s.stroke_type == t) {
                    present.push_back(t);
                    break;
                }
        }
        return present;
    };
    auto types_absent = [&] {
        std::vector<StrokeType> absent;
        auto present = types_present();
        for (StrokeType t : all_stroke_types())
            if (std::find(present.begin(), present.end(), t) == present.end())
                absent.push_back(t);
        return absent;
    };

    switch (category) {
        case QueryCategory::ActionClassification: {
            int idx = std::uniform_int_distribution<int>(1, n)(rng);
            const auto& stroke = rally.strokes[idx - 1];
            q.text = "What shot is stroke " + std::to_string(idx) + "?";
            q.gold_answer = stroke_type_phrase(stroke.stroke_type);
            out.cot_rationale = "Inspect stroke " + std::to_string(idx) + ": " +
                                caption_stroke(stroke) + " Therefore the answer is " +
                                *q.gold_answer + ".";
            break;
        }
        case QueryCategory::ActionCount: {
            auto present = types_present();
            StrokeType target;
            if (!present.empty() && std::uniform_real_distribution<double>(0, 1)(rng) < 0.75) {
                target = present[std::uniform_int_distribution<size_t>(0, present.size() - 1)(rng)];
            } else {
                target = all_stroke_types()[std::uniform_int_distribution<size_t>(
                    0, all_stroke_types().size() - 1)(rng)];
            }
            int count = 0;
            std::string inspected;
            for (const auto& s : rally.strokes) {
                if (s.stroke_type == target) {
                    ++count;
                    inspected += " Stroke " + std::to_string(s.stroke_index) + " matches.";
                }
            }
            std::string phrase = stroke_type_phrase(target);
            q.text = "How many " + detail::pluralize(phrase) + " occurred in this rally?";
            q.gold_answer = std::to_string(count);
            out.cot_rationale = "Scan all " + std::to_string(n) + " strokes for " +
                                detail::pluralize(phrase) + "." + inspected + " Total: " +
                                std::to_string(count) + ".";
            break;
        }
        case QueryCategory::TemporalLocalization: {
            auto absent = types_absent();
            StrokeType target;
            bool want_negative =
                std::uniform_real_distribution<double>(0, 1)(rng) < negative_ratio &&
                !absent.empty();
            if (want_negative) {
                target = absent[std::uniform_int_distribution<size_t>(0, absent.size() - 1)(rng)];
            } else {
                auto present = types_present();
                if (present.empty()) present = {StrokeType::Other};
                target = present[std::uniform_int_distribution<size_t>(0, present.size() - 1)(rng)];
            }
            std::set<int> gold;
            for (const auto& s : rally.strokes)
                if (s.stroke_type == target) gold.insert(s.stroke_index);
            std::string phrase = stroke_type_phrase(target);
            q.text = "Which strokes are " + detail::pluralize(phrase) + "?";
            q.gold_strokes = gold;
            std::string listed;
            for (int i : gold) listed += " Stroke " + std::to_string(i) + " matches.";
            if (gold.empty()) listed = " No stroke matches.";
            out.cot_rationale = "Scan all " + std::to_string(n) + " strokes for " +
                                detail::pluralize(phrase) + "." + listed;
            break;
        }
        case QueryCategory::Summarisation: {
            q.text = "Summarize this rally.";
            q.gold_answer = caption_rally(rally);
            out.cot_rationale =
                "Describe each of the " + std::to_string(n) + " strokes in order.";
            break;
        }
        default:
            throw CoachError("synthesize_qa does not support category " + to_string(category));
    }
    return out;
}

}  // namespace coach
