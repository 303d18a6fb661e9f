#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "coach/domain.hpp"
#include "coach/errors.hpp"

namespace coach {

struct ScriptLine {
    std::string narration;
    std::vector<StrokeRef> stroke_refs;

    friend bool operator==(const ScriptLine&, const ScriptLine&) = default;
};

struct SummaryScript {
    std::string title;
    std::vector<ScriptLine> lines;

    friend bool operator==(const SummaryScript&, const SummaryScript&) = default;
};

inline void to_json(json& j, const ScriptLine& l) {
    j = json{{"narration", l.narration}, {"stroke_refs", l.stroke_refs}};
}

inline void from_json(const json& j, ScriptLine& l) {
    j.at("narration").get_to(l.narration);
    j.at("stroke_refs").get_to(l.stroke_refs);
}

inline void to_json(json& j, const SummaryScript& s) {
    j = json{{"title", s.title}, {"lines", s.lines}};
}

inline void from_json(const json& j, SummaryScript& s) {
    j.at("title").get_to(s.title);
    j.at("lines").get_to(s.lines);
}

struct EdlEntry {
    TimeSegment segment;
    std::string narration;

    friend bool operator==(const EdlEntry&, const EdlEntry&) = default;
};

struct EditDecisionList {
    std::string source_video;
    std::vector<EdlEntry> entries;  // sorted by start_s, non-overlapping, in-bounds

    friend bool operator==(const EditDecisionList&, const EditDecisionList&) = default;
};

inline void to_json(json& j, const EdlEntry& e) {
    j = json{{"segment", e.segment}, {"narration", e.narration}};
}

inline void from_json(const json& j, EdlEntry& e) {
    j.at("segment").get_to(e.segment);
    j.at("narration").get_to(e.narration);
}

inline void to_json(json& j, const EditDecisionList& e) {
    j = json{{"source_video", e.source_video}, {"entries", e.entries}};
}

inline void from_json(const json& j, EditDecisionList& e) {
    j.at("source_video").get_to(e.source_video);
    j.at("entries").get_to(e.entries);
}

struct PadConfig {
    double pad_before_s = 1.0;
    double pad_after_s = 0.5;
};

namespace detail {

struct TimedStroke {
    double start;
    double end;
    std::string label;
};

inline TimedStroke stroke_extent(const MatchRecord& match, const StrokeRef& ref) {
    const Rally* rally = match.find_rally(ref.rally_id);
    if (!rally)
        throw UnknownStrokeRef("unknown rally " + ref.rally_id);
    int n = static_cast<int>(rally->strokes.size());
    if (ref.stroke_index < 1 || ref.stroke_index > n)
        throw UnknownStrokeRef("rally " + ref.rally_id + " has no stroke " +
                               std::to_string(ref.stroke_index));
    const auto& stroke = rally->strokes[ref.stroke_index - 1];
    // A stroke runs until the next stroke of its rally; the final stroke gets 2 s.
    double end = ref.stroke_index < n ? rally->strokes[ref.stroke_index].time_s
                                      : stroke.time_s + 2.0;
    return {stroke.time_s, end,
            ref.rally_id + "/stroke" + std::to_string(ref.stroke_index)};
}

inline std::vector<TimeSegment> merge_segments(std::vector<TimeSegment> segments) {
    std::sort(segments.begin(), segments.end(), [](const auto& a, const auto& b) {
        return std::tie(a.start_s, a.end_s) < std::tie(b.start_s, b.end_s);
    });
    std::vector<TimeSegment> out;
    for (const auto& seg : segments) {
        if (!out.empty() && seg.start_s <= out.back().end_s) {
            out.back().end_s = std::max(out.back().end_s, seg.end_s);
            if (!seg.label.empty()) {
                if (!out.back().label.empty()) out.back().label += "+";
                out.back().label += seg.label;
            }
        } else {
            out.push_back(seg);
        }
    }
    return out;
}

}  // namespace detail

/// Padded, clamped, merged time segments for a set of stroke refs.
inline std::vector<TimeSegment> segments_from_strokes(const MatchRecord& match,
                                                      const std::vector<StrokeRef>& refs,
                                                      double pad_before_s, double pad_after_s) {
    if (pad_before_s < 0 || pad_after_s < 0) throw ConfigError("pads must be non-negative");
    std::vector<TimeSegment> raw;
    for (const auto& ref : refs) {
        auto ext = detail::stroke_extent(match, ref);
        TimeSegment seg;
        seg.start_s = std::max(0.0, ext.start - pad_before_s);
        seg.end_s = std::min(match.video_duration_s, ext.end + pad_after_s);
        if (seg.end_s <= seg.start_s) continue;  // fully clamped away
        seg.label = ext.label;
        raw.push_back(seg);
    }
    return detail::merge_segments(std::move(raw));
}

/// One set of merged segments per script line; entries globally re-merged so
/// the EDL stays sorted and non-overlapping when lines share time ranges.
inline EditDecisionList build_edl(const MatchRecord& match, const SummaryScript& script,
                                  const PadConfig& pads,
                                  const std::string& source_video = "match.mp4") {
    std::vector<EdlEntry> raw;
    for (const auto& line : script.lines) {
        for (const auto& seg :
             segments_from_strokes(match, line.stroke_refs, pads.pad_before_s, pads.pad_after_s)) {
            raw.push_back({seg, line.narration});
        }
    }
    std::sort(raw.begin(), raw.end(), [](const EdlEntry& a, const EdlEntry& b) {
        return std::tie(a.segment.start_s, a.segment.end_s) <
               std::tie(b.segment.start_s, b.segment.end_s);
    });
    EditDecisionList edl;
    edl.source_video = source_video;
    for (const auto& entry : raw) {
        if (!edl.entries.empty() && entry.segment.start_s < edl.entries.back().segment.end_s) {
            auto& prev = edl.entries.back();
            prev.segment.end_s = std::max(prev.segment.end_s, entry.segment.end_s);
            if (prev.narration != entry.narration) prev.narration += " / " + entry.narration;
        } else {
            edl.entries.push_back(entry);
        }
    }
    return edl;
}

/// Deterministic token list for an external cutter; never executed in-process.
/// Template: ffmpeg -i <src> [-ss <start> -to <end> ...] -concat <out>
inline std::vector<std::string> render_command(const EditDecisionList& edl,
                                               const std::string& output_path) {
    if (edl.entries.empty()) throw EmptyEdl();
    std::vector<std::string> tokens = {"ffmpeg", "-nostdin", "-i", edl.source_video};
    std::string filter;
    for (size_t i = 0; i < edl.entries.size(); ++i) {
        const auto& seg = edl.entries[i].segment;
        filter += "[0:v]trim=start=" + json(seg.start_s).dump() +
                  ":end=" + json(seg.end_s).dump() + ",setpts=PTS-STARTPTS[v" +
                  std::to_string(i) + "];";
    }
    for (size_t i = 0; i < edl.entries.size(); ++i) filter += "[v" + std::to_string(i) + "]";
    filter += "concat=n=" + std::to_string(edl.entries.size()) + ":v=1[out]";
    tokens.push_back("-filter_complex");
    tokens.push_back(filter);
    tokens.push_back("-map");
    tokens.push_back("[out]");
    tokens.push_back(output_path);
    return tokens;
}

}  // namespace coach
