#pragma once

#include <functional>
#include <optional>

#include "ellwarp/csr.hpp"

namespace ellwarp::bench {

struct FetchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bytes of the resource at `url`. Injected in tests; the default uses libcurl.
using Transport = std::function<std::vector<char>(const std::string& url)>;

struct MatrixEntry {
    std::string alias;      // short name used on the command line
    std::string group;      // collection group
    std::string file;       // collection matrix name
    idx nrows;              // expected dimensions, verified after download
    idx ncols;
    std::string fallback;   // synthetic spec with similar statistics
};

// The benchmark matrix registry. Heart-mesh aliases have no collection entry
// (group empty) and always resolve to their synthetic fallback.
const std::vector<MatrixEntry>& matrix_registry();

const MatrixEntry* find_matrix_entry(const std::string& alias);

struct FetchOptions {
    bool offline = false;
    Transport transport;  // empty: default HTTP transport
};

// Downloads <alias> into <cache_dir>/<alias>.mtx (idempotent: a cache hit
// never touches the transport), decompressing the collection tar.gz and
// verifying the declared dimensions on first download. Unknown aliases raise
// an error that lists the available names.
std::string fetch_matrix(const std::string& name, const std::string& cache_dir,
                         const FetchOptions& opts = {});

// Resolves a matrix argument: "synthetic:<spec>" dispatches to the
// generators, a registry alias fetches (or falls back to its synthetic
// stand-in when offline), anything else is read as a Matrix Market file.
SparseCsr load_matrix_spec(const std::string& spec, const std::string& cache_dir,
                           const FetchOptions& opts = {}, std::uint64_t seed = 1);

// Extracts the first .mtx member from an uncompressed ustar archive.
std::string extract_mtx_from_tar(std::span<const char> tar_bytes);

}  // namespace ellwarp::bench
