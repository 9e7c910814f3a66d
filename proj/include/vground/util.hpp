#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vground {

// FNV-1a 64-bit content digest, hex encoded. Used to tie run artifacts to the
// exact bytes of their inputs.
uint64_t fnv1a64(const void* data, size_t n);
std::string digest_hex(const std::string& bytes);
std::string file_digest(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

std::string lowercase(const std::string& s);

}  // namespace vground
