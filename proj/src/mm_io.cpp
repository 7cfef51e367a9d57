#include "ellwarp/mm_io.hpp"

#include <zlib.h>

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ellwarp {

namespace {

[[noreturn]] void fail(idx line, const std::string& what) {
    throw MatrixMarketError("matrix market: line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

idx parse_index(const std::string& tok, idx line) {
    idx v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) fail(line, "bad index '" + tok + "'");
    return v;
}

real parse_value(const std::string& tok, idx line) {
    try {
        std::size_t pos = 0;
        real v = std::stod(tok, &pos);
        if (pos != tok.size()) fail(line, "bad numeric value '" + tok + "'");
        return v;
    } catch (const std::logic_error&) {
        fail(line, "bad numeric value '" + tok + "'");
    }
}

}  // namespace

SparseCoo parse_matrix_market(std::istream& in) {
    std::string line;
    idx lineno = 0;

    if (!std::getline(in, line)) fail(1, "empty input");
    ++lineno;
    auto header = tokenize(line);
    if (header.size() < 4 || lower(header[0]) != "%%matrixmarket" || lower(header[1]) != "matrix") {
        fail(lineno, "malformed header '" + line + "'");
    }
    const std::string format = lower(header[2]);
    const std::string field = lower(header[3]);
    const std::string symmetry = header.size() > 4 ? lower(header[4]) : "general";
    if (format != "coordinate") fail(lineno, "unsupported format '" + format + "' (coordinate only)");
    if (field != "real" && field != "integer" && field != "pattern") {
        fail(lineno, "unsupported field '" + field + "'");
    }
    if (symmetry != "general" && symmetry != "symmetric") {
        fail(lineno, "unsupported symmetry '" + symmetry + "'");
    }
    const bool pattern = field == "pattern";
    const bool symmetric = symmetry == "symmetric";

    // size line (comments in between allowed)
    SparseCoo m;
    idx declared_nnz = 0;
    for (;;) {
        if (!std::getline(in, line)) fail(lineno + 1, "missing size line");
        ++lineno;
        if (line.empty() || line[0] == '%') continue;
        auto toks = tokenize(line);
        if (toks.size() != 3) fail(lineno, "size line needs 'nrows ncols nnz'");
        m.nrows = parse_index(toks[0], lineno);
        m.ncols = parse_index(toks[1], lineno);
        declared_nnz = parse_index(toks[2], lineno);
        if (m.nrows < 0 || m.ncols < 0 || declared_nnz < 0) fail(lineno, "negative size");
        break;
    }

    m.entries.reserve(static_cast<std::size_t>(symmetric ? 2 * declared_nnz : declared_nnz));
    idx seen = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '%') continue;
        auto toks = tokenize(line);
        const std::size_t want = pattern ? 2 : 3;
        if (toks.size() < want) fail(lineno, "entry line too short");
        const idx i = parse_index(toks[0], lineno) - 1;
        const idx j = parse_index(toks[1], lineno) - 1;
        if (i < 0 || i >= m.nrows || j < 0 || j >= m.ncols) {
            fail(lineno, "index (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                             ") outside declared " + std::to_string(m.nrows) + "x" +
                             std::to_string(m.ncols));
        }
        const real v = pattern ? 1.0 : parse_value(toks[2], lineno);
        m.entries.push_back({i, j, v});
        if (symmetric && i != j) m.entries.push_back({j, i, v});
        ++seen;
    }
    if (seen != declared_nnz) {
        fail(lineno, "declared " + std::to_string(declared_nnz) + " entries, found " +
                         std::to_string(seen));
    }
    canonicalize(m);
    return m;
}

SparseCoo parse_matrix_market_string(const std::string& text) {
    std::istringstream iss(text);
    return parse_matrix_market(iss);
}

std::string gunzip(std::span<const char> bytes) {
    z_stream zs{};
    // 16+MAX_WBITS: accept gzip wrapper
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw std::runtime_error("inflateInit2 failed");
    std::string out;
    std::vector<char> buf(1 << 16);
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
    zs.avail_in = static_cast<uInt>(bytes.size());
    int ret = Z_OK;
    do {
        zs.next_out = reinterpret_cast<Bytef*>(buf.data());
        zs.avail_out = static_cast<uInt>(buf.size());
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw std::runtime_error("gzip inflate failed (code " + std::to_string(ret) + ")");
        }
        out.append(buf.data(), buf.size() - zs.avail_out);
        // concatenated gzip members
        if (ret == Z_STREAM_END && zs.avail_in > 0) {
            if (inflateReset2(&zs, 16 + MAX_WBITS) != Z_OK) break;
            ret = Z_OK;
        }
    } while (ret != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
    inflateEnd(&zs);
    return out;
}

SparseCoo read_matrix_market_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (raw.size() >= 2 && static_cast<unsigned char>(raw[0]) == 0x1f &&
        static_cast<unsigned char>(raw[1]) == 0x8b) {
        raw = gunzip(raw);
    }
    return parse_matrix_market_string(raw);
}

}  // namespace ellwarp
