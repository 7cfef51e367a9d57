#include "ellwarp/bench/fetch.hpp"

#include <curl/curl.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "ellwarp/mm_io.hpp"
#include "ellwarp/synth.hpp"

namespace ellwarp::bench {

namespace fs = std::filesystem;

const std::vector<MatrixEntry>& matrix_registry() {
    static const std::vector<MatrixEntry> entries = {
        {"circuit", "Hamm", "scircuit", 170998, 170998,
         "powerlaw_rows:nrows=2048,alpha=1.4,maxrow=353,seed=11"},
        {"economics", "Williams", "mac_econ_fwd500", 206500, 206500,
         "powerlaw_rows:nrows=2048,alpha=0.8,maxrow=44,seed=12"},
        {"epidemiology", "Williams", "mc2depi", 525825, 525825,
         "uniform_band:n=4096,row_len=4"},
        {"accelerator", "Williams", "cop20k_A", 121192, 121192,
         "fem_tet_graph:n=2048,minrow=8,maxrow=81,seed=13"},
        {"cantilever", "Williams", "cant", 62451, 62451,
         "fem_tet_graph:n=1024,minrow=2,maxrow=78,seed=14"},
        {"harbor", "Bova", "rma10", 46835, 46835,
         "fem_tet_graph:n=1024,minrow=4,maxrow=145,seed=15"},
        {"ship", "DNVS", "shipsec1", 140874, 140874,
         "fem_tet_graph:n=2048,minrow=24,maxrow=102,seed=16"},
        {"spheres", "Williams", "consph", 83334, 83334,
         "fem_tet_graph:n=1024,minrow=2,maxrow=81,seed=17"},
        {"protein", "Williams", "pdb1HYS", 36417, 36417,
         "fem_tet_graph:n=1024,minrow=18,maxrow=204,seed=18"},
        {"qcd", "QCD", "conf5_4-8x8-05", 49152, 49152, "uniform_band:n=2048,row_len=39"},
        {"webbase", "Williams", "webbase-1M", 1000005, 1000005,
         "powerlaw_rows:nrows=2000,alpha=2.0,maxrow=1000,seed=19"},
        {"windtunnel", "Boeing", "pwtk", 217918, 217918,
         "fem_tet_graph:n=2048,minrow=2,maxrow=180,seed=20"},
        {"heart3k", "", "", 3129, 3129, "fem_tet_graph:n=3129,minrow=5,maxrow=21,seed=3"},
        {"heart5k", "", "", 4563, 4563, "fem_tet_graph:n=4563,minrow=6,maxrow=22,seed=5"},
        {"heart30k", "", "", 28639, 28639, "fem_tet_graph:n=28639,minrow=6,maxrow=24,seed=30"},
    };
    return entries;
}

const MatrixEntry* find_matrix_entry(const std::string& alias) {
    for (const auto& e : matrix_registry()) {
        if (e.alias == alias) return &e;
    }
    return nullptr;
}

namespace {

std::string available_names() {
    std::string names;
    for (const auto& e : matrix_registry()) {
        if (!names.empty()) names += ", ";
        names += e.alias;
    }
    return names;
}

std::size_t curl_sink(char* data, std::size_t size, std::size_t nmemb, void* userp) {
    auto* out = static_cast<std::vector<char>*>(userp);
    out->insert(out->end(), data, data + size * nmemb);
    return size * nmemb;
}

std::vector<char> default_transport(const std::string& url) {
    CURL* curl = curl_easy_init();
    if (!curl) throw FetchError("curl init failed");
    std::vector<char> body;
    curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, curl_sink);
    curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
    curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
    const CURLcode rc = curl_easy_perform(curl);
    long status = 0;
    curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &status);
    curl_easy_cleanup(curl);
    if (rc != CURLE_OK) {
        throw FetchError("download failed for " + url + ": " + curl_easy_strerror(rc));
    }
    if (status >= 400) {
        throw FetchError("download failed for " + url + ": HTTP " + std::to_string(status));
    }
    return body;
}

idx parse_octal(const char* field, std::size_t len) {
    idx v = 0;
    for (std::size_t i = 0; i < len && field[i]; ++i) {
        if (field[i] == ' ') continue;
        if (field[i] < '0' || field[i] > '7') break;
        v = v * 8 + (field[i] - '0');
    }
    return v;
}

}  // namespace

std::string extract_mtx_from_tar(std::span<const char> tar) {
    std::size_t off = 0;
    while (off + 512 <= tar.size()) {
        const char* hdr = tar.data() + off;
        bool empty = true;
        for (int i = 0; i < 512 && empty; ++i) empty = hdr[i] == 0;
        if (empty) break;
        std::string name(hdr, strnlen(hdr, 100));
        if (hdr[345] != 0) {  // ustar prefix field
            std::string prefix(hdr + 345, strnlen(hdr + 345, 155));
            name = prefix + "/" + name;
        }
        const idx size = parse_octal(hdr + 124, 12);
        const char type = hdr[156];
        off += 512;
        if ((type == '0' || type == 0) && name.size() >= 4 &&
            name.compare(name.size() - 4, 4, ".mtx") == 0) {
            if (off + static_cast<std::size_t>(size) > tar.size()) {
                throw FetchError("tar member truncated: " + name);
            }
            return std::string(tar.data() + off, static_cast<std::size_t>(size));
        }
        off += static_cast<std::size_t>(ceil_div(size, 512) * 512);
    }
    throw FetchError("no .mtx member found in archive");
}

std::string fetch_matrix(const std::string& name, const std::string& cache_dir,
                         const FetchOptions& opts) {
    const MatrixEntry* entry = find_matrix_entry(name);
    if (entry == nullptr) {
        throw FetchError("unknown matrix '" + name + "'; available: " + available_names());
    }
    if (entry->group.empty()) {
        throw FetchError("matrix '" + name +
                         "' is not in the public collection; use synthetic:" + entry->fallback);
    }
    fs::create_directories(cache_dir);
    const fs::path cached = fs::path(cache_dir) / (entry->alias + ".mtx");
    if (fs::exists(cached)) return cached.string();
    if (opts.offline) {
        throw FetchError("offline and '" + name + "' is not cached; synthetic fallback: " +
                         entry->fallback);
    }

    const std::string url = "https://suitesparse-collection-website.engr.tamu.edu/MM/" +
                            entry->group + "/" + entry->file + ".tar.gz";
    const Transport& transport = opts.transport ? opts.transport : Transport(default_transport);
    std::vector<char> archive = transport(url);
    const std::string tar = gunzip(archive);
    const std::string mtx = extract_mtx_from_tar(std::span<const char>(tar.data(), tar.size()));

    // verify declared dimensions before committing to the cache
    const SparseCoo parsed = parse_matrix_market_string(mtx);
    if (parsed.nrows != entry->nrows || parsed.ncols != entry->ncols) {
        throw FetchError("dimension mismatch for '" + name + "': expected " +
                         std::to_string(entry->nrows) + "x" + std::to_string(entry->ncols) +
                         ", file declares " + std::to_string(parsed.nrows) + "x" +
                         std::to_string(parsed.ncols));
    }

    const fs::path tmp = cached.string() + ".part";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw FetchError("cannot write " + tmp.string());
        f.write(mtx.data(), static_cast<std::streamsize>(mtx.size()));
    }
    fs::rename(tmp, cached);
    return cached.string();
}

SparseCsr load_matrix_spec(const std::string& spec, const std::string& cache_dir,
                           const FetchOptions& opts, std::uint64_t seed) {
    if (spec.rfind("synthetic:", 0) == 0) {
        return generate_synthetic(spec.substr(10), seed);
    }
    if (const MatrixEntry* entry = find_matrix_entry(spec)) {
        if (entry->group.empty()) return generate_synthetic(entry->fallback, seed);
        const fs::path cached = fs::path(cache_dir) / (entry->alias + ".mtx");
        if (!fs::exists(cached) && opts.offline) {
            return generate_synthetic(entry->fallback, seed);
        }
        try {
            return coo_to_csr(read_matrix_market_file(fetch_matrix(spec, cache_dir, opts)));
        } catch (const FetchError&) {
            // network failure: fall back to the synthetic stand-in
            return generate_synthetic(entry->fallback, seed);
        }
    }
    return coo_to_csr(read_matrix_market_file(spec));
}

}  // namespace ellwarp::bench
