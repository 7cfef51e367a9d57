#pragma once

#include <array>
#include <list>
#include <optional>
#include <unordered_map>

#include "ellwarp/types.hpp"

namespace ellwarp {

// Deterministic lockstep warp execution: a warp issues one memory step at a
// time, and a step costs one transaction per distinct aligned segment touched
// by its active lanes.

struct WarpModelConfig {
    int warp_size = 32;        // power of two
    int block_size = 128;      // multiple of warp_size; recorded, no effect on results
    int segment_bytes = 128;
    bool align_warp_offsets = true;  // pad flat arrays so each warp starts on a segment boundary
    bool ideal_cache = false;        // fully associative LRU cache for x loads
    int cache_lines = 64;

    void validate() const;
};

enum class MemSpace : int { matrix_values = 0, col_indices, x_vector, y_vector, metadata };
constexpr int kNumSpaces = 5;
const char* to_string(MemSpace s);

enum class AccessKind { load, store };

struct MemAccess {
    MemSpace space;
    idx byte_address;
    int byte_width;  // 4 or 8
    AccessKind kind;
};

// Number of distinct floor(addr / segment_bytes) values among the accesses.
// All accesses in one step must share space and kind.
idx trace_warp_step(std::span<const MemAccess> accesses, idx segment_bytes);

struct TransactionReport {
    std::array<idx, kNumSpaces> load_transactions{};
    std::array<idx, kNumSpaces> store_transactions{};
    idx useful_bytes = 0;  // 20 * nnz
    idx total_warp_steps = 0;
    idx cache_hits = 0;

    idx transactions(MemSpace s) const {
        return load_transactions[static_cast<int>(s)] + store_transactions[static_cast<int>(s)];
    }
    idx total_transactions() const;
};

// useful_bytes / (total_transactions * segment_bytes). Values above 1 are
// possible when broadcast reuse beats the flat 20-bytes-per-nonzero
// accounting; reported unclamped.
real effective_bandwidth_proxy(const TransactionReport& report, idx segment_bytes);

// Fully associative LRU cache over segment ids (ideal texture-cache stand-in).
class IdealCache {
  public:
    explicit IdealCache(int lines) : capacity_(lines) {}
    bool access(idx segment);  // true on hit

  private:
    int capacity_;
    std::list<idx> lru_;
    std::unordered_map<idx, std::list<idx>::iterator> where_;
};

// Accumulates a TransactionReport from warp steps. Kernels call step() with
// the element indices each active lane touches; element width and a per-space
// base address turn those into byte addresses.
class WarpTracer {
  public:
    explicit WarpTracer(const WarpModelConfig& cfg);

    // lane_elems: element indices of active lanes (inactive lanes omitted).
    void step(MemSpace space, AccessKind kind, int byte_width,
              std::span<const idx> lane_elems);

    // broadcast scalar read (all active lanes hit the same element)
    void broadcast(MemSpace space, idx elem, int byte_width);

    TransactionReport& report() { return report_; }
    const WarpModelConfig& config() const { return cfg_; }

  private:
    WarpModelConfig cfg_;
    TransactionReport report_;
    std::optional<IdealCache> cache_;
    std::vector<idx> scratch_;
};

}  // namespace ellwarp
