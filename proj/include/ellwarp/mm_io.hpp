#pragma once

#include <iosfwd>

#include "ellwarp/csr.hpp"

namespace ellwarp {

struct MatrixMarketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parses Matrix Market coordinate format (real/integer/pattern values,
// general or symmetric storage). Symmetric inputs are expanded to full
// storage, pattern entries get value 1.0, indices are converted to 0-based.
// The result is canonicalized. Errors carry the offending line number.
SparseCoo parse_matrix_market(std::istream& in);

SparseCoo parse_matrix_market_string(const std::string& text);

// Reads a .mtx or gzip-compressed .mtx.gz file (detected by magic bytes).
SparseCoo read_matrix_market_file(const std::string& path);

// Inflates a gzip byte stream (used for .mtx.gz and fetched archives).
std::string gunzip(std::span<const char> bytes);

}  // namespace ellwarp
