#pragma once

#include <atomic>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "coach/agents.hpp"
#include "coach/domain.hpp"
#include "coach/errors.hpp"

namespace coach {

struct Chunk {
    std::string chunk_id;
    std::vector<std::string> rally_refs;  // ordered rally_ids
    int stroke_count = 0;
};

struct DispatchConfig {
    int max_chunk_strokes = 64;
    int parallelism = 4;
    double per_call_timeout_s = 30.0;
};

/// Greedy packing of whole rallies, in match order. A rally is never split.
inline std::vector<Chunk> chunk_match(const MatchRecord& match, int max_chunk_strokes) {
    std::vector<Chunk> out;
    Chunk current;
    auto flush = [&] {
        if (!current.rally_refs.empty()) {
            current.chunk_id = "chunk" + std::to_string(out.size());
            out.push_back(current);
            current = Chunk{};
        }
    };
    for (const auto& rally : match.rallies) {
        int n = static_cast<int>(rally.strokes.size());
        if (n > max_chunk_strokes) throw RallyTooLarge(rally.rally_id);
        if (current.stroke_count + n > max_chunk_strokes) flush();
        current.rally_refs.push_back(rally.rally_id);
        current.stroke_count += n;
    }
    flush();
    return out;
}

struct DispatchCell {
    std::string sub_query_id;
    std::string sub_query;
    std::string chunk_id;
    bool ok = false;
    std::string error;
    GroundingResult result;
};

struct BatchResult {
    std::vector<DispatchCell> cells;  // sorted (sub-query order, chunk order)
};

inline json chunk_context(const MatchRecord& match, const Chunk& chunk) {
    json rallies = json::array();
    for (const auto& rally_id : chunk.rally_refs) {
        const Rally* rally = match.find_rally(rally_id);
        if (!rally) throw InvariantViolation("chunk references unknown rally " + rally_id);
        rallies.push_back(json{{"rally_id", rally_id}, {"caption", caption_rally(*rally)}});
    }
    return json{{"match_id", match.match_id}, {"rallies", rallies}};
}

/// One Grounder invocation per (chunk, sub-query) cell, at most `parallelism`
/// in flight. Output order is fixed by cell index, never by completion order.
/// A failed cell is recorded with its reason; only an all-failed batch throws.
inline BatchResult dispatch_batch(const MatchRecord& match, const std::vector<Chunk>& chunks,
                                  const std::vector<std::string>& sub_queries,
                                  AgentBackend& grounder_backend, int parallelism) {
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");

    BatchResult batch;
    const size_t n_cells = sub_queries.size() * chunks.size();
    batch.cells.resize(n_cells);

    // Rally order within each chunk follows match order, so sorting refs by
    // chunk-local rally position keeps global addressing deterministic.
    std::map<std::string, int> rally_order;
    for (size_t i = 0; i < match.rallies.size(); ++i)
        rally_order[match.rallies[i].rally_id] = static_cast<int>(i);

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t cell_idx = next.fetch_add(1); cell_idx < n_cells;
             cell_idx = next.fetch_add(1)) {
            size_t qi = cell_idx / chunks.size();
            size_t ci = cell_idx % chunks.size();
            DispatchCell& cell = batch.cells[cell_idx];
            cell.sub_query_id = "sq" + std::to_string(qi);
            cell.sub_query = sub_queries[qi];
            cell.chunk_id = chunks[ci].chunk_id;
            cell.result.sub_query_id = cell.sub_query_id;
            cell.result.chunk_id = cell.chunk_id;
            try {
                auto request = make_grounder_request(
                    sub_queries[qi], chunk_context(match, chunks[ci]),
                    cell.sub_query_id + "/" + cell.chunk_id);
                auto response = invoke(grounder_backend, request);
                cell.result.stroke_refs = std::get<GrounderResponse>(response).stroke_refs;
                std::sort(cell.result.stroke_refs.begin(), cell.result.stroke_refs.end(),
                          [&](const StrokeRef& a, const StrokeRef& b) {
                              int oa = rally_order.count(a.rally_id) ? rally_order[a.rally_id]
                                                                     : -1;
                              int ob = rally_order.count(b.rally_id) ? rally_order[b.rally_id]
                                                                     : -1;
                              return std::tie(oa, a.stroke_index) < std::tie(ob, b.stroke_index);
                          });
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.error = e.what();
            }
        }
    };

    int workers = std::min<int>(parallelism, static_cast<int>(n_cells));
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    if (n_cells > 0 &&
        std::none_of(batch.cells.begin(), batch.cells.end(), [](const auto& c) { return c.ok; }))
        throw FullBatchFailure();
    return batch;
}

/// Per sub-query union of chunk sets, order-preserving (chunks partition the
/// match, so concatenation order is global order); deduplicated defensively.
inline std::map<std::string, std::vector<StrokeRef>> merge_results(const BatchResult& batch) {
    std::map<std::string, std::vector<StrokeRef>> out;
    for (const auto& cell : batch.cells) {
        if (!cell.ok) continue;
        auto& refs = out[cell.sub_query_id];
        for (const auto& ref : cell.result.stroke_refs)
            if (std::find(refs.begin(), refs.end(), ref) == refs.end()) refs.push_back(ref);
    }
    return out;
}

}  // namespace coach
