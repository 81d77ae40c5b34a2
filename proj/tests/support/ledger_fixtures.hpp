#pragma once

#include "watt/ledger/chain.hpp"

#include <numeric>
#include <string>

namespace watt::testing {

inline ledger::Hash32 filled(std::uint8_t v) {
    ledger::Hash32 h;
    h.fill(v);
    return h;
}

inline ledger::Transaction fixture_tx(std::string from, std::string to, std::uint64_t amount, std::uint64_t gas,
                                      ledger::Hash32 payload, std::int64_t ts) {
    ledger::Transaction tx;
    tx.from_account = std::move(from);
    tx.to_account = std::move(to);
    tx.amount_paise = amount;
    tx.gas = gas;
    tx.payload_hash = payload;
    tx.timestamp_ms = ts;
    tx.tx_id = ledger::compute_tx_id(tx);
    return tx;
}

// Mirrors tests/oracles/golden_block_hash.py.
inline ledger::Block fixture_block() {
    ledger::Block b;
    b.index = 1;
    b.timestamp_ms = 1700000000999;
    std::iota(b.prev_hash.begin(), b.prev_hash.end(), std::uint8_t{0});
    b.transactions.push_back(fixture_tx("meter-001", "utility", 60900, 22600, filled(0xAA), 1700000000123));
    b.transactions.push_back(fixture_tx("consumer-\xc3\x9f", "utility", 0, 21000, filled(0x11), -5));
    b.gas_total = 43600;
    b.hash = ledger::hash_block(b);
    return b;
}

} // namespace watt::testing
