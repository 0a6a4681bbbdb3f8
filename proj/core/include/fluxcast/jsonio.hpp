#pragma once

#include <cstdint>
#include <string>

namespace fluxcast::io {

// Writes via a temp file in the same directory, then renames into place.
void atomic_write_text(const std::string& path, const std::string& text);

std::string read_text(const std::string& path);

// FNV-1a 64-bit of the text, as 16 hex digits; used as config fingerprint.
std::string fingerprint(const std::string& text);

} // namespace fluxcast::io
