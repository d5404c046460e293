// Small shared helpers: case folding, file IO, CSV field escaping.
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace crystal {

// ASCII-only uppercase fold. Tokens, prepositions and labels are canonicalized
// with this at load time; non-ASCII bytes pass through untouched.
std::string to_upper(std::string_view s);

// Strips leading/trailing spaces and tabs.
std::string_view trim(std::string_view s);

std::string read_file(const std::string& path);

// Writes to a temp file in the same directory, then renames over the target,
// so a failed run never leaves a partial output file behind.
void write_file_atomic(const std::string& path, std::string_view content);

std::string csv_escape(std::string_view field);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace crystal
