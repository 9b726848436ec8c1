#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace rte {

// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::byte> data);
std::string sha256_hex(std::string_view text);

}  // namespace rte
