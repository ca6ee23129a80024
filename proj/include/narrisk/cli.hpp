#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "narrisk/corpus.hpp"
#include "narrisk/features.hpp"
#include "narrisk/glm.hpp"

namespace narrisk::cli {

enum ExitCode : int { ok = 0, io_or_usage = 1, validation = 2, numerical = 3 };

struct RunConfig {
    std::filesystem::path manifest;
    std::optional<Language> language;
    std::vector<FeatureGroup> groups;
    std::filesystem::path lexicon;
    std::vector<std::filesystem::path> keyword_files;
    std::filesystem::path model;
    std::string tier;
    PenaltyConfig penalty;
    int repetitions = 100;
    std::uint64_t seed = 0;
    std::filesystem::path out = ".";
    std::optional<Split> split;
    unsigned jobs = 1;
};

/// Canonical "key=value" lines describing the config; hashed into run.json.
std::string canonical(const RunConfig& config);

/// FNV-1a 64-bit digest.
std::uint64_t fnv1a(std::string_view bytes);

/// Entry point shared by the executable and the tests. Returns the exit code.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace narrisk::cli
