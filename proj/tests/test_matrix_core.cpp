#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <set>

#include "doctest.h"
#include "ellwarp/mm_io.hpp"
#include "ellwarp/synth.hpp"
#include "test_support.hpp"

using namespace ellwarp;
namespace ewt = ellwarp::testing;

namespace {

// independent construction oracle: build a dense matrix, re-derive CSR by a
// row scan, compare field by field
SparseCsr dense_scan_csr(const std::vector<std::vector<real>>& dense) {
    SparseCsr out;
    out.nrows = static_cast<idx>(dense.size());
    out.ncols = dense.empty() ? 0 : static_cast<idx>(dense[0].size());
    out.row_offsets.push_back(0);
    for (const auto& row : dense) {
        for (idx c = 0; c < out.ncols; ++c) {
            if (row[c] != 0.0) {
                out.col_indices.push_back(c);
                out.values.push_back(row[c]);
            }
        }
        out.row_offsets.push_back(static_cast<idx>(out.col_indices.size()));
    }
    return out;
}

std::vector<std::vector<real>> to_dense(const SparseCsr& m) {
    std::vector<std::vector<real>> dense(m.nrows, std::vector<real>(m.ncols, 0.0));
    for (idx r = 0; r < m.nrows; ++r) {
        for (idx k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
            dense[r][m.col_indices[k]] += m.values[k];
        }
    }
    return dense;
}

}  // namespace

TEST_CASE("matrix market: basic coordinate real general") {
    const std::string text =
        "%%MatrixMarket matrix coordinate real general\n"
        "% comment line\n"
        "2 2 2\n"
        "1 1 3.0\n"
        "2 2 4.0\n";
    const SparseCoo m = parse_matrix_market_string(text);
    REQUIRE(m.nrows == 2);
    REQUIRE(m.ncols == 2);
    REQUIRE(m.entries.size() == 2);
    CHECK(m.entries[0].row == 0);
    CHECK(m.entries[0].col == 0);
    CHECK(m.entries[0].value == 3.0);
    CHECK(m.entries[1].row == 1);
    CHECK(m.entries[1].col == 1);
    CHECK(m.entries[1].value == 4.0);
}

TEST_CASE("matrix market: symmetric expansion") {
    const std::string text =
        "%%MatrixMarket matrix coordinate real symmetric\n"
        "2 2 2\n"
        "2 1 5.0\n"
        "2 2 1.0\n";
    const SparseCoo m = parse_matrix_market_string(text);
    REQUIRE(m.entries.size() == 3);
    CHECK(m.entries[0].row == 0);
    CHECK(m.entries[0].col == 1);
    CHECK(m.entries[0].value == 5.0);
    CHECK(m.entries[1].row == 1);
    CHECK(m.entries[1].col == 0);
    CHECK(m.entries[1].value == 5.0);
}

TEST_CASE("matrix market: symmetric pattern equals its transpose") {
    const std::string text =
        "%%MatrixMarket matrix coordinate pattern symmetric\n"
        "4 4 5\n"
        "2 1\n3 1\n4 2\n3 3\n4 3\n";
    const SparseCsr m = coo_to_csr(parse_matrix_market_string(text));
    const auto dense = to_dense(m);
    for (idx i = 0; i < m.nrows; ++i) {
        for (idx j = 0; j < m.ncols; ++j) CHECK(dense[i][j] == dense[j][i]);
    }
    // pattern entries get value 1.0
    for (real v : m.values) CHECK(v == 1.0);
}

TEST_CASE("matrix market: errors carry line numbers") {
    CHECK_THROWS_WITH_AS(parse_matrix_market_string("%%Garbage\n1 1 0\n"),
                         doctest::Contains("line 1"), MatrixMarketError);
    CHECK_THROWS_WITH_AS(
        parse_matrix_market_string(
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n"),
        doctest::Contains("line 3"), MatrixMarketError);
    CHECK_THROWS_WITH_AS(
        parse_matrix_market_string(
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n"),
        doctest::Contains("line 3"), MatrixMarketError);
}

TEST_CASE("matrix market: gzip round trip") {
    const std::string text =
        "%%MatrixMarket matrix coordinate real general\n"
        "2 2 1\n"
        "1 2 7.5\n";
    // compress with zlib's gzip wrapper through a temp file
    const std::string path = "mm_gzip_roundtrip.mtx.gz";
    {
        gzFile f = gzopen(path.c_str(), "wb");
        REQUIRE(f != nullptr);
        gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
        gzclose(f);
    }
    const SparseCoo m = read_matrix_market_file(path);
    std::remove(path.c_str());
    REQUIRE(m.entries.size() == 1);
    CHECK(m.entries[0].row == 0);
    CHECK(m.entries[0].col == 1);
    CHECK(m.entries[0].value == 7.5);
}

TEST_CASE("coo_to_csr: hand cases") {
    SUBCASE("empty 3x3") {
        SparseCoo coo;
        coo.nrows = coo.ncols = 3;
        const SparseCsr m = coo_to_csr(coo);
        CHECK(m.row_offsets == std::vector<idx>{0, 0, 0, 0});
    }
    SUBCASE("two entries") {
        SparseCoo coo;
        coo.nrows = coo.ncols = 2;
        coo.entries = {{0, 1, 2.0}, {1, 0, 3.0}};
        canonicalize(coo);
        const SparseCsr m = coo_to_csr(coo);
        CHECK(m.row_offsets == std::vector<idx>{0, 1, 2});
        CHECK(m.col_indices == std::vector<idx>{1, 0});
        CHECK(m.values == std::vector<real>{2.0, 3.0});
    }
    SUBCASE("duplicates summed") {
        SparseCoo coo;
        coo.nrows = coo.ncols = 2;
        coo.entries = {{0, 0, 1.0}, {0, 0, 2.5}};
        canonicalize(coo);
        const SparseCsr m = coo_to_csr(coo);
        REQUIRE(m.nnz() == 1);
        CHECK(m.values[0] == 3.5);
    }
}

TEST_CASE("coo_to_csr matches dense-scan oracle on random matrices") {
    for (int seed = 0; seed < 10; ++seed) {
        const SparseCsr m = ewt::random_csr(50, 50, 0.1, 1000 + seed);
        const SparseCsr rescanned = dense_scan_csr(to_dense(m));
        CHECK(m.row_offsets == rescanned.row_offsets);
        CHECK(m.col_indices == rescanned.col_indices);
        CHECK(m.values == rescanned.values);
    }
}

TEST_CASE("csr <-> coo round trip is the identity") {
    for (int seed = 0; seed < 8; ++seed) {
        const SparseCsr m = ewt::random_case(seed);
        const SparseCsr back = coo_to_csr(csr_to_coo(m));
        CHECK(m.row_offsets == back.row_offsets);
        CHECK(m.col_indices == back.col_indices);
        CHECK(m.values == back.values);
    }
}

TEST_CASE("spmv reference: identity and single-row worked example") {
    SUBCASE("identity") {
        const SparseCsr id = uniform_band(3, 1);
        std::vector<real> x = {1.0, 2.0, 3.0};
        // uniform_band(3,1) has diagonal value 2.0, scale manually
        SparseCsr eye = id;
        for (auto& v : eye.values) v = 1.0;
        CHECK(spmv_csr_reference(eye, x) == std::vector<real>{1.0, 2.0, 3.0});
    }
    SUBCASE("single row, 0-based") {
        SparseCsr m;
        m.nrows = 1;
        m.ncols = 7;
        m.row_offsets = {0, 5};
        m.col_indices = {0, 1, 3, 4, 5};
        m.values = {7.0, 8.0, 9.0, 10.0, 2.0};
        const std::vector<real> x = {1, 2, 3, 4, 5, 6, 7};
        const auto y = spmv_csr_reference(m, x);
        REQUIRE(y.size() == 1);
        CHECK(y[0] == 121.0);
    }
    SUBCASE("dimension mismatch") {
        const SparseCsr m = laplacian3d(2, 2, 2);
        std::vector<real> x(7, 1.0);
        CHECK_THROWS_AS((void)spmv_csr_reference(m, x), std::invalid_argument);
    }
}

TEST_CASE("spmv reference matches dense mat-vec on random 100x100") {
    const SparseCsr m = ewt::random_csr(100, 100, 0.08, 424242);
    const auto dense = to_dense(m);
    const auto x = ewt::random_vector(100, 7);
    const auto y = spmv_csr_reference(m, x);
    for (idx r = 0; r < 100; ++r) {
        real expect = 0.0;
        for (idx c = 0; c < 100; ++c) expect += dense[r][c] * x[c];
        CHECK(almost_equal(y[r], expect, 1e-12));
    }
}

TEST_CASE("matrix_stats: hand cases and histogram mass") {
    SUBCASE("3x3 identity") {
        SparseCsr eye = uniform_band(3, 1);
        const MatrixStats s = matrix_stats(eye);
        CHECK(s.nnz == 3);
        CHECK(s.minrow == 1);
        CHECK(s.maxrow == 1);
        CHECK(s.histogram.at(1) == 3);
        CHECK(s.bytes == 60);
    }
    SUBCASE("histogram mass equals nnz") {
        for (int seed = 0; seed < 8; ++seed) {
            const SparseCsr m = ewt::random_case(seed);
            const MatrixStats s = matrix_stats(m);
            idx mass = 0;
            for (const auto& [len, count] : s.histogram) mass += len * count;
            CHECK(mass == s.nnz);
            CHECK(s.bytes == 20 * s.nnz);
            if (m.nrows > 0) {
                CHECK(s.minrow <= s.mean_nnz_per_row + 1e-12);
                CHECK(s.mean_nnz_per_row <= s.maxrow + 1e-12);
            }
        }
    }
}

TEST_CASE("generators") {
    SUBCASE("laplacian3d(2,2,2)") {
        const SparseCsr m = laplacian3d(2, 2, 2);
        CHECK(m.nrows == 8);
        for (idx r = 0; r < 8; ++r) {
            idx offdiag = 0;
            for (idx k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
                if (m.col_indices[k] == r) {
                    CHECK(m.values[k] == 6.0);
                } else {
                    CHECK(m.values[k] == -1.0);
                    offdiag++;
                }
            }
            CHECK(offdiag == 3);  // every corner of a 2x2x2 grid has 3 neighbors
        }
    }
    SUBCASE("fem_tet_graph row bounds and symmetry") {
        const SparseCsr m = fem_tet_graph(3129, 5, 21, 1);
        const MatrixStats s = matrix_stats(m);
        CHECK(m.nrows == 3129);
        CHECK(s.minrow >= 5);
        CHECK(s.maxrow <= 21);
        // symmetric pattern
        const SparseCoo coo = csr_to_coo(m);
        std::set<std::pair<idx, idx>> pat;
        for (const auto& e : coo.entries) pat.insert({e.row, e.col});
        for (const auto& e : coo.entries) CHECK(pat.count({e.col, e.row}) == 1);
    }
    SUBCASE("powerlaw skew") {
        const SparseCsr m = powerlaw_rows(1000, 2.0, 4700, 7);
        const MatrixStats s = matrix_stats(m);
        std::vector<idx> lengths;
        for (idx r = 0; r < m.nrows; ++r) lengths.push_back(m.row_length(r));
        std::sort(lengths.begin(), lengths.end());
        const idx median = lengths[lengths.size() / 2];
        CHECK(s.maxrow / std::max<idx>(1, median) > 100);
    }
    SUBCASE("determinism for fixed seed") {
        const SparseCsr a = fem_tet_graph(500, 5, 21, 42);
        const SparseCsr b = fem_tet_graph(500, 5, 21, 42);
        CHECK(a.col_indices == b.col_indices);
        CHECK(a.values == b.values);
    }
    SUBCASE("invalid dimensions") {
        CHECK_THROWS_AS((void)laplacian3d(0, 2, 2), std::invalid_argument);
        CHECK_THROWS_AS((void)uniform_band(4, 9), std::invalid_argument);
    }
}

TEST_CASE("synthetic spec parser") {
    const SparseCsr a = generate_synthetic("laplacian3d:2,2,2");
    CHECK(a.nrows == 8);
    const SparseCsr b = generate_synthetic("uniform_band:n=16,row_len=3");
    CHECK(b.nrows == 16);
    CHECK(matrix_stats(b).minrow == 3);
    CHECK_THROWS_AS((void)generate_synthetic("nope:1"), std::invalid_argument);
}
