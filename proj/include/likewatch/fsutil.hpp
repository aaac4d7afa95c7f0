#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace lw {

// write-then-rename so readers never observe a torn file
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// lexicographically sorted matches of prefix*suffix directly under dir
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              const std::string& prefix,
                                              const std::string& suffix);

// FNV-1a 64-bit hex digest; used for token fingerprints in manifests.
std::string fingerprint(const std::string& s);

}  // namespace lw
