#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace quadrant::digest {

/// SHA-256 of the raw bytes, lowercase hex.
std::string sha256_hex(std::string_view data);

/// SHA-256 over a sequence of fields, each length-prefixed so that field
/// boundaries cannot collide ("ab","c" vs "a","bc" hash differently).
std::string sha256_fields_hex(const std::vector<std::string_view>& fields);

}  // namespace quadrant::digest
