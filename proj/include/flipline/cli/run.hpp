#pragma once

#include <set>
#include <string>
#include <vector>

#include "flipline/cli/config.hpp"

namespace flipline::cli {

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::set<std::size_t> diagnostic;  // columns where NaN is allowed
};

// Header comment with the config hash, then the column row, then rows at 17
// significant digits.
std::string to_csv(const ResultTable& t, const std::string& hash);

struct OutputFile {
    std::string name;  // relative to the output directory
    std::string contents;
};

// Computes every output of a run in memory; nothing touches the disk.
std::vector<OutputFile> run(const RunConfig& c);

// Writes outputs plus a manifest carrying the wall-clock timestamp (kept out
// of the CSVs so they stay byte-reproducible). Removes what it wrote on failure.
void write_outputs(const RunConfig& c, const std::vector<OutputFile>& files);

// Worker count for sweeps: FLIPLINE_THREADS if set, else hardware concurrency.
unsigned worker_count();

int main_entry(int argc, char** argv);

}  // namespace flipline::cli
