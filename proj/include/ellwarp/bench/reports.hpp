#pragma once

#include <iosfwd>
#include <map>

#include "ellwarp/types.hpp"

namespace ellwarp::bench {

// A rectangular table with a header row; the on-disk CSV round-trips exactly.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    idx column(const std::string& name) const;  // -1 if absent
};

std::string to_csv(const Table& t);
Table from_csv(const std::string& text);
std::string to_json(const Table& t);  // array of objects, stable key order

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace ellwarp::bench
