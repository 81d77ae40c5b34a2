#pragma once

#include "watt/ledger/hash.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace watt::ledger {

inline constexpr std::uint32_t kBlockFormatVersion = 1;
inline constexpr std::uint64_t kBaseGas = 21000;
inline constexpr std::uint64_t kGasPerPayloadByte = 16;

// Gas figure shown for a transaction: 21000 + 16 per payload byte. Reported
// only; never debited from balances.
std::uint64_t compute_gas(std::size_t payload_bytes);

struct Transaction {
    Hash32 tx_id{};
    std::string from_account;
    std::string to_account;
    std::uint64_t amount_paise = 0;
    std::uint64_t gas = 0;
    Hash32 payload_hash{};
    std::int64_t timestamp_ms = 0;

    bool operator==(const Transaction&) const = default;
};

// Builds a transaction whose payload_hash, gas and tx_id are derived from
// the payload document.
Transaction make_transaction(std::string from_account, std::string to_account, std::uint64_t amount_paise,
                             std::string_view payload, std::int64_t timestamp_ms);

// Canonical transaction bytes: for from_account and to_account, a u32
// big-endian length then the UTF-8 bytes; then u64 BE amount_paise, u64 BE
// gas, the 32-byte payload_hash and i64 BE timestamp_ms.
std::vector<std::uint8_t> canonical_bytes(const Transaction& tx);

// SHA-256 of the canonical transaction bytes.
Hash32 compute_tx_id(const Transaction& tx);

struct Block {
    std::uint64_t index = 0;
    std::int64_t timestamp_ms = 0;
    Hash32 prev_hash{};
    std::vector<Transaction> transactions;
    std::uint64_t gas_total = 0;
    Hash32 hash{};

    bool operator==(const Block&) const = default;
};

// Canonical block bytes: u32 BE version (1) | u64 BE index | i64 BE
// timestamp_ms | prev_hash | u32 BE tx_count | each transaction's canonical
// bytes in order. gas_total and hash are not part of the hashed content.
std::vector<std::uint8_t> canonical_bytes(const Block& block);

Hash32 hash_block(const Block& block);

// Index 0, no transactions, zero prev_hash.
Block genesis(std::int64_t timestamp_ms);

nlohmann::ordered_json to_json(const Transaction& tx);
nlohmann::ordered_json to_json(const Block& block);
Transaction transaction_from_json(const nlohmann::json& j);
Block block_from_json(const nlohmann::json& j);

} // namespace watt::ledger
