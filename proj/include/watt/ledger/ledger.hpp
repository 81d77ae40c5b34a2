#pragma once

#include "watt/ledger/chain.hpp"

#include <filesystem>
#include <optional>
#include <shared_mutex>

namespace watt::ledger {

struct LedgerConfig {
    std::int64_t genesis_timestamp_ms = 0;
    Balances opening_balances;
};

// Blocks read from an NDJSON chain file. Parsing stops at the first line that
// is not a well-formed block; its zero-based line number is reported so a
// damaged file still yields an earliest bad index.
struct ChainFile {
    std::vector<Block> blocks;
    std::optional<std::uint64_t> unreadable_index;
    std::string error;
};

ChainFile read_chain_file(const std::filesystem::path& path);

// Verdict for a chain file, combining parse failures with verify_chain.
VerifyResult verify_chain_file(const std::filesystem::path& path);

// Thread-safe owner of a Chain. Appends are serialized; reads and
// verification run on a consistent snapshot. With a directory, blocks are
// appended to <dir>/chain.ndjson and opening balances kept in
// <dir>/accounts.json.
class Ledger {
public:
    explicit Ledger(LedgerConfig config = {});
    Ledger(std::filesystem::path directory, LedgerConfig config = {});

    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;

    Block append(std::vector<Transaction> transactions, std::int64_t timestamp_ms);

    std::vector<Block> blocks() const;
    std::optional<Block> block(std::uint64_t index) const;
    Block head() const;
    std::size_t size() const;

    std::int64_t balance(std::string_view account) const;
    Balances balances() const;
    bool has_account(std::string_view account) const;

    VerifyResult verify() const;

    // Locates the block containing a transaction id.
    std::optional<std::uint64_t> find_transaction(const Hash32& tx_id) const;

    const std::optional<std::filesystem::path>& directory() const { return directory_; }

private:
    std::optional<std::filesystem::path> directory_;
    mutable std::shared_mutex mutex_;
    Chain chain_;
};

} // namespace watt::ledger
