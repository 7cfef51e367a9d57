#include "ellwarp/warp_model.hpp"

#include <algorithm>

namespace ellwarp {

void WarpModelConfig::validate() const {
    require(warp_size > 0 && (warp_size & (warp_size - 1)) == 0, "warp_size must be a power of two");
    require(block_size >= warp_size && block_size % warp_size == 0,
            "block_size must be a positive multiple of warp_size");
    require(segment_bytes > 0 && (segment_bytes & (segment_bytes - 1)) == 0,
            "segment_bytes must be a power of two");
    require(cache_lines > 0, "cache_lines must be positive");
}

const char* to_string(MemSpace s) {
    switch (s) {
        case MemSpace::matrix_values: return "matrix_values";
        case MemSpace::col_indices: return "col_indices";
        case MemSpace::x_vector: return "x_vector";
        case MemSpace::y_vector: return "y_vector";
        case MemSpace::metadata: return "metadata";
    }
    return "?";
}

idx trace_warp_step(std::span<const MemAccess> accesses, idx segment_bytes) {
    if (accesses.empty()) return 0;
    const MemSpace space = accesses.front().space;
    const AccessKind kind = accesses.front().kind;
    std::vector<idx> segs;
    segs.reserve(accesses.size());
    for (const auto& a : accesses) {
        require(a.space == space && a.kind == kind, "mixed spaces or kinds in one warp step");
        require(a.byte_width == 4 || a.byte_width == 8, "byte_width must be 4 or 8");
        segs.push_back(a.byte_address / segment_bytes);
    }
    std::sort(segs.begin(), segs.end());
    return static_cast<idx>(std::unique(segs.begin(), segs.end()) - segs.begin());
}

idx TransactionReport::total_transactions() const {
    idx t = 0;
    for (int s = 0; s < kNumSpaces; ++s) t += load_transactions[s] + store_transactions[s];
    return t;
}

real effective_bandwidth_proxy(const TransactionReport& report, idx segment_bytes) {
    const idx total = report.total_transactions();
    require(total > 0, "effective_bandwidth_proxy: no transactions recorded");
    return static_cast<real>(report.useful_bytes) /
           (static_cast<real>(total) * static_cast<real>(segment_bytes));
}

bool IdealCache::access(idx segment) {
    auto it = where_.find(segment);
    if (it != where_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second);
        return true;
    }
    lru_.push_front(segment);
    where_[segment] = lru_.begin();
    if (static_cast<int>(lru_.size()) > capacity_) {
        where_.erase(lru_.back());
        lru_.pop_back();
    }
    return false;
}

WarpTracer::WarpTracer(const WarpModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.ideal_cache) cache_.emplace(cfg_.cache_lines);
}

void WarpTracer::step(MemSpace space, AccessKind kind, int byte_width,
                      std::span<const idx> lane_elems) {
    if (lane_elems.empty()) return;
    report_.total_warp_steps++;
    scratch_.clear();
    for (idx e : lane_elems) scratch_.push_back(e * byte_width / cfg_.segment_bytes);
    std::sort(scratch_.begin(), scratch_.end());
    scratch_.erase(std::unique(scratch_.begin(), scratch_.end()), scratch_.end());

    idx count = 0;
    if (cache_ && space == MemSpace::x_vector && kind == AccessKind::load) {
        for (idx seg : scratch_) {
            if (cache_->access(seg)) {
                report_.cache_hits++;
            } else {
                count++;
            }
        }
    } else {
        count = static_cast<idx>(scratch_.size());
    }
    auto& bucket = kind == AccessKind::load ? report_.load_transactions : report_.store_transactions;
    bucket[static_cast<int>(space)] += count;
}

void WarpTracer::broadcast(MemSpace space, idx elem, int byte_width) {
    const idx one[] = {elem};
    step(space, AccessKind::load, byte_width, one);
}

}  // namespace ellwarp
