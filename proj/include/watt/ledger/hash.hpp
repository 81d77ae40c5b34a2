#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace watt::ledger {

using Hash32 = std::array<std::uint8_t, 32>;

inline constexpr Hash32 kZeroHash{};

Hash32 sha256(std::span<const std::uint8_t> bytes);
Hash32 sha256(std::string_view bytes);

std::string to_hex(std::span<const std::uint8_t> bytes);

// Lower- or upper-case hex of exactly 64 digits. Throws ValidationError.
Hash32 hash_from_hex(std::string_view hex);

} // namespace watt::ledger
