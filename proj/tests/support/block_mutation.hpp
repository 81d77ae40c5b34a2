#pragma once

#include "watt/ledger/block.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace watt::testing {

// Visits every stored byte of a block (integers as their 8 little-endian
// in-memory bytes, hashes, account name bytes), in a fixed order.
inline void for_each_block_byte(ledger::Block& b, const std::function<void(std::uint8_t&)>& visit) {
    auto raw = [&](auto& value) {
        auto* p = reinterpret_cast<std::uint8_t*>(&value);
        for (std::size_t i = 0; i < sizeof(value); ++i) visit(p[i]);
    };
    auto bytes = [&](auto& container) {
        for (auto& c : container) visit(reinterpret_cast<std::uint8_t&>(c));
    };
    raw(b.index);
    raw(b.timestamp_ms);
    bytes(b.prev_hash);
    for (auto& tx : b.transactions) {
        bytes(tx.tx_id);
        bytes(tx.from_account);
        bytes(tx.to_account);
        raw(tx.amount_paise);
        raw(tx.gas);
        bytes(tx.payload_hash);
        raw(tx.timestamp_ms);
    }
    raw(b.gas_total);
    bytes(b.hash);
}

inline std::size_t block_byte_count(ledger::Block b) {
    std::size_t n = 0;
    for_each_block_byte(b, [&](std::uint8_t&) { ++n; });
    return n;
}

// XORs byte `position` of the block with a non-zero mask.
inline void mutate_block_byte(ledger::Block& b, std::size_t position, std::uint8_t mask) {
    std::size_t n = 0;
    for_each_block_byte(b, [&](std::uint8_t& byte) {
        if (n++ == position) byte ^= mask;
    });
}

} // namespace watt::testing
