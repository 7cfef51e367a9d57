#include "ellwarp/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

namespace ellwarp {

SparseCsr laplacian3d(idx nx, idx ny, idx nz) {
    require(nx > 0 && ny > 0 && nz > 0, "laplacian3d: dimensions must be positive");
    const idx n = nx * ny * nz;
    auto node = [&](idx i, idx j, idx k) { return (k * ny + j) * nx + i; };
    SparseCoo coo;
    coo.nrows = coo.ncols = n;
    for (idx k = 0; k < nz; ++k) {
        for (idx j = 0; j < ny; ++j) {
            for (idx i = 0; i < nx; ++i) {
                const idx r = node(i, j, k);
                coo.entries.push_back({r, r, 6.0});
                if (i > 0) coo.entries.push_back({r, node(i - 1, j, k), -1.0});
                if (i + 1 < nx) coo.entries.push_back({r, node(i + 1, j, k), -1.0});
                if (j > 0) coo.entries.push_back({r, node(i, j - 1, k), -1.0});
                if (j + 1 < ny) coo.entries.push_back({r, node(i, j + 1, k), -1.0});
                if (k > 0) coo.entries.push_back({r, node(i, j, k - 1), -1.0});
                if (k + 1 < nz) coo.entries.push_back({r, node(i, j, k + 1), -1.0});
            }
        }
    }
    canonicalize(coo);
    return coo_to_csr(coo);
}

SparseCsr fem_tet_graph(idx n, idx minrow, idx maxrow, std::uint64_t seed) {
    require(n > 0, "fem_tet_graph: n must be positive");
    require(minrow >= 2 && maxrow >= minrow && maxrow <= n,
            "fem_tet_graph: need 2 <= minrow <= maxrow <= n");
    std::mt19937_64 rng(seed);
    std::vector<std::set<idx>> adj(n);  // off-diagonal neighbors per row

    auto degree = [&](idx r) { return static_cast<idx>(adj[r].size()) + 1; };
    auto connect = [&](idx a, idx b) {
        if (a == b) return false;
        if (degree(a) >= maxrow || degree(b) >= maxrow) return false;
        if (!adj[a].insert(b).second) return false;
        adj[b].insert(a);
        return true;
    };

    // unimodal row-length targets spanning [minrow, maxrow], as in stiffness
    // matrices of unstructured tet meshes
    std::normal_distribution<real> target_dist(0.5 * static_cast<real>(minrow + maxrow) + 1.0,
                                               static_cast<real>(maxrow - minrow) / 4.0 + 0.5);
    std::vector<idx> target(n);
    for (idx r = 0; r < n; ++r) {
        target[r] = std::clamp<idx>(static_cast<idx>(std::llround(target_dist(rng))), minrow,
                                    maxrow);
    }

    // Mesh-like locality: neighbors drawn from a window around each node.
    const idx window = std::max<idx>(maxrow * 4, 16);
    std::uniform_int_distribution<idx> offs(1, window);
    for (idx r = 0; r < n; ++r) {
        idx guard = 0;
        while (degree(r) < target[r] && guard++ < 16 * maxrow) {
            idx o = offs(rng);
            idx c = (rng() & 1) ? r + o : r - o;
            if (c < 0 || c >= n) c = (r + o) % n;
            connect(r, c);
        }
        // deterministic fallback: walk outward until the row meets minrow
        for (idx o = 1; degree(r) < minrow && o < n; ++o) {
            connect(r, (r + o) % n);
        }
    }

    SparseCoo coo;
    coo.nrows = coo.ncols = n;
    for (idx r = 0; r < n; ++r) {
        coo.entries.push_back({r, r, static_cast<real>(degree(r)) + 0.5});
        for (idx c : adj[r]) coo.entries.push_back({r, c, -1.0});
    }
    canonicalize(coo);
    return coo_to_csr(coo);
}

SparseCsr powerlaw_rows(idx nrows, real alpha, idx maxrow, std::uint64_t seed, idx ncols) {
    require(nrows > 0, "powerlaw_rows: nrows must be positive");
    require(alpha > 0.0, "powerlaw_rows: alpha must be positive");
    if (ncols <= 0) ncols = std::max(nrows, maxrow);
    const idx cap = std::min(maxrow, ncols);
    require(cap >= 1, "powerlaw_rows: maxrow must be >= 1");

    std::vector<idx> lengths(nrows);
    for (idx k = 0; k < nrows; ++k) {
        const real len = static_cast<real>(cap) * std::pow(static_cast<real>(k + 1), -alpha);
        lengths[k] = std::clamp<idx>(static_cast<idx>(std::llround(len)), 1, cap);
    }
    std::mt19937_64 rng(seed);
    std::shuffle(lengths.begin(), lengths.end(), rng);

    SparseCoo coo;
    coo.nrows = nrows;
    coo.ncols = ncols;
    std::uniform_real_distribution<real> val(0.1, 1.0);
    std::vector<idx> cols;
    for (idx r = 0; r < nrows; ++r) {
        const idx len = lengths[r];
        cols.clear();
        if (len * 2 >= ncols) {
            // dense-ish row: sample by shuffling the full column range
            std::vector<idx> all(ncols);
            std::iota(all.begin(), all.end(), 0);
            std::shuffle(all.begin(), all.end(), rng);
            cols.assign(all.begin(), all.begin() + len);
        } else {
            std::set<idx> chosen;
            std::uniform_int_distribution<idx> pick(0, ncols - 1);
            while (static_cast<idx>(chosen.size()) < len) chosen.insert(pick(rng));
            cols.assign(chosen.begin(), chosen.end());
        }
        for (idx c : cols) coo.entries.push_back({r, c, val(rng)});
    }
    canonicalize(coo);
    return coo_to_csr(coo);
}

SparseCsr uniform_band(idx n, idx row_len) {
    require(n > 0 && row_len > 0 && row_len <= n, "uniform_band: need 0 < row_len <= n");
    SparseCoo coo;
    coo.nrows = coo.ncols = n;
    for (idx r = 0; r < n; ++r) {
        for (idx k = 0; k < row_len; ++k) {
            const idx c = (r + k) % n;
            coo.entries.push_back({r, c, c == r ? 2.0 * static_cast<real>(row_len) : -1.0});
        }
    }
    canonicalize(coo);
    return coo_to_csr(coo);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find(sep, start);
        if (end == std::string::npos) end = s.size();
        out.push_back(s.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

class ParamMap {
  public:
    ParamMap(const std::string& body, std::initializer_list<const char*> positional) {
        auto parts = split(body, ',');
        std::size_t pos = 0;
        for (const auto& p : parts) {
            if (p.empty()) continue;
            auto eq = p.find('=');
            if (eq == std::string::npos) {
                require(pos < positional.size(), "synthetic spec: too many positional params");
                kv_.emplace_back(*(positional.begin() + pos++), p);
            } else {
                kv_.emplace_back(p.substr(0, eq), p.substr(eq + 1));
            }
        }
    }
    idx get(const std::string& key, idx fallback) const {
        for (const auto& [k, v] : kv_)
            if (k == key) return std::stoll(v);
        return fallback;
    }
    real getf(const std::string& key, real fallback) const {
        for (const auto& [k, v] : kv_)
            if (k == key) return std::stod(v);
        return fallback;
    }

  private:
    std::vector<std::pair<std::string, std::string>> kv_;
};

}  // namespace

SparseCsr generate_synthetic(const std::string& spec, std::uint64_t default_seed) {
    auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string body = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "laplacian3d") {
        ParamMap p(body, {"nx", "ny", "nz"});
        return laplacian3d(p.get("nx", 4), p.get("ny", 4), p.get("nz", 4));
    }
    if (kind == "fem_tet_graph") {
        ParamMap p(body, {"n", "minrow", "maxrow", "seed"});
        return fem_tet_graph(p.get("n", 3129), p.get("minrow", 5), p.get("maxrow", 21),
                             static_cast<std::uint64_t>(p.get("seed", static_cast<idx>(default_seed))));
    }
    if (kind == "powerlaw_rows" || kind == "powerlaw") {
        ParamMap p(body, {"nrows", "alpha", "maxrow", "seed"});
        return powerlaw_rows(p.get("nrows", 1000), p.getf("alpha", 2.0), p.get("maxrow", 4700),
                             static_cast<std::uint64_t>(p.get("seed", static_cast<idx>(default_seed))),
                             p.get("ncols", 0));
    }
    if (kind == "uniform_band") {
        ParamMap p(body, {"n", "row_len"});
        return uniform_band(p.get("n", 256), p.get("row_len", 39));
    }
    throw std::invalid_argument("unknown synthetic kind '" + kind +
                                "' (laplacian3d, fem_tet_graph, powerlaw_rows, uniform_band)");
}

}  // namespace ellwarp
