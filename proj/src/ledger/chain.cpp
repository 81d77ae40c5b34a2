#include "watt/ledger/chain.hpp"

#include "watt/common/errors.hpp"

#include <limits>

namespace watt::ledger {

VerifyResult verify_chain(std::span<const Block> blocks) {
    auto fail = [](std::uint64_t index, std::string reason) {
        return VerifyResult{false, index, std::move(reason)};
    };
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const Block& b = blocks[i];
        if (b.index != i) return fail(i, "index out of sequence");
        const Hash32& expected_prev = i == 0 ? kZeroHash : blocks[i - 1].hash;
        if (b.prev_hash != expected_prev) return fail(i, "prev_hash does not link to the previous block");
        std::uint64_t gas = 0;
        for (const auto& tx : b.transactions) {
            if (compute_tx_id(tx) != tx.tx_id) return fail(i, "transaction id does not match its contents");
            gas += tx.gas;
        }
        if (gas != b.gas_total) return fail(i, "gas_total does not equal the sum of transaction gas");
        if (hash_block(b) != b.hash) return fail(i, "stored hash does not match block contents");
    }
    return {};
}

Chain::Chain(std::int64_t genesis_timestamp_ms, Balances opening_balances)
    : opening_(std::move(opening_balances)), balances_(opening_) {
    for (const auto& [account, amount] : opening_) {
        if (amount < 0) throw ConfigError("opening balance for '" + account + "' is negative");
    }
    blocks_.push_back(genesis(genesis_timestamp_ms));
}

namespace {

void apply_transfer(Balances& balances, const Transaction& tx) {
    if (tx.amount_paise > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        throw ValidationError("transaction amount out of range");
    }
    const auto amount = static_cast<std::int64_t>(tx.amount_paise);
    if (amount == 0) return;
    balances[tx.from_account] -= amount;
    balances[tx.to_account] += amount;
}

} // namespace

Chain Chain::from_blocks(std::vector<Block> blocks, Balances opening_balances) {
    if (blocks.empty()) throw CorruptDataError("chain has no genesis block");
    Chain c(0, {});
    c.blocks_ = std::move(blocks);
    c.opening_ = std::move(opening_balances);
    c.balances_ = c.opening_;
    for (const auto& b : c.blocks_) {
        for (const auto& tx : b.transactions) apply_transfer(c.balances_, tx);
    }
    return c;
}

const Block& Chain::add_block(std::vector<Transaction> transactions, std::int64_t timestamp_ms) {
    if (transactions.empty()) throw ValidationError("a block must carry at least one transaction");

    Balances next = balances_;
    std::uint64_t gas_total = 0;
    for (const auto& tx : transactions) {
        if (compute_tx_id(tx) != tx.tx_id) throw ValidationError("transaction id does not match its contents");
        if (tx.from_account.empty() || tx.to_account.empty()) throw ValidationError("transaction accounts must be named");
        if (tx.amount_paise > 0) {
            const auto it = next.find(tx.from_account);
            const std::int64_t available = it == next.end() ? 0 : it->second;
            if (tx.amount_paise > static_cast<std::uint64_t>(std::max<std::int64_t>(available, 0))) {
                throw InsufficientBalanceError("account '" + tx.from_account + "' holds " + std::to_string(available) +
                                               " paise, needs " + std::to_string(tx.amount_paise));
            }
        }
        apply_transfer(next, tx);
        gas_total += tx.gas;
    }

    Block b;
    b.index = blocks_.size();
    b.timestamp_ms = timestamp_ms;
    b.prev_hash = head().hash;
    b.transactions = std::move(transactions);
    b.gas_total = gas_total;
    b.hash = hash_block(b);

    blocks_.push_back(std::move(b));
    balances_ = std::move(next);
    return blocks_.back();
}

std::int64_t Chain::balance(std::string_view account) const {
    const auto it = balances_.find(account);
    return it == balances_.end() ? 0 : it->second;
}

} // namespace watt::ledger
