#pragma once

#include <filesystem>
#include <iosfwd>

#include "qkws/hybrid.hpp"

namespace qkws {

// Single-file model container: a magic tag and format version, a JSON
// metadata document (kind, configs, seed, freeze mask), then one named
// little-endian float64 blob per stored tensor. Round-trips bit-exactly.
void save_model(HybridModel& model, const std::filesystem::path& path);
void save_model(HybridModel& model, std::ostream& out);

HybridModel load_model(const std::filesystem::path& path);
HybridModel load_model(std::istream& in);

} // namespace qkws
