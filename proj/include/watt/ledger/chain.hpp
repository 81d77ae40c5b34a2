#pragma once

#include "watt/ledger/block.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace watt::ledger {

using Balances = std::map<std::string, std::int64_t, std::less<>>;

struct VerifyResult {
    bool ok = true;
    std::optional<std::uint64_t> first_bad_index;
    std::string reason;
};

// Recomputes every content hash, transaction id, gas total and link, and
// reports the smallest index at which any check fails.
VerifyResult verify_chain(std::span<const Block> blocks);

// Single-writer hash chain with account balances in integer paise. Not
// internally synchronized; see Ledger for the shared, persistent wrapper.
class Chain {
public:
    explicit Chain(std::int64_t genesis_timestamp_ms = 0, Balances opening_balances = {});

    // Adopts blocks as stored, without verifying them, and derives balances
    // by replaying their transfers over the opening balances.
    static Chain from_blocks(std::vector<Block> blocks, Balances opening_balances);

    // Appends a block holding `transactions`. Balances move atomically with
    // the append. Throws ValidationError for an empty or malformed batch and
    // InsufficientBalanceError when a payer cannot cover an amount; in both
    // cases the chain is unchanged.
    const Block& add_block(std::vector<Transaction> transactions, std::int64_t timestamp_ms);

    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& head() const { return blocks_.back(); }
    std::size_t size() const { return blocks_.size(); }

    std::int64_t balance(std::string_view account) const;
    const Balances& balances() const { return balances_; }
    const Balances& opening_balances() const { return opening_; }

    VerifyResult verify() const { return verify_chain(blocks_); }

private:
    std::vector<Block> blocks_;
    Balances opening_;
    Balances balances_;
};

} // namespace watt::ledger
