#include "watt/ledger/ledger.hpp"

#include "watt/common/errors.hpp"
#include "watt/common/io.hpp"

#include <fstream>
#include <mutex>

namespace watt::ledger {

namespace {

constexpr const char* kChainFile = "chain.ndjson";
constexpr const char* kAccountsFile = "accounts.json";

Balances read_opening_balances(const std::filesystem::path& path) {
    Balances out;
    if (!std::filesystem::exists(path)) return out;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw CorruptDataError(path.string() + ": " + e.what());
    }
    const auto it = j.find("opening_balances");
    if (it == j.end() || !it->is_object()) throw CorruptDataError(path.string() + ": missing opening_balances");
    for (const auto& [account, amount] : it->items()) {
        if (!amount.is_number_integer()) throw CorruptDataError(path.string() + ": balances must be integers");
        out[account] = amount.get<std::int64_t>();
    }
    return out;
}

void write_opening_balances(const std::filesystem::path& path, const Balances& balances) {
    nlohmann::ordered_json j;
    j["opening_balances"] = nlohmann::ordered_json::object();
    for (const auto& [account, amount] : balances) j["opening_balances"][account] = amount;
    write_file_atomic(path, j.dump(2) + "\n");
}

void append_block_line(const std::filesystem::path& path, const Block& b) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << to_json(b).dump() << '\n';
    out.flush();
    if (!out) throw Error("failed to persist block " + std::to_string(b.index));
}

} // namespace

ChainFile read_chain_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw NotFoundError("no chain file at " + path.string());
    ChainFile out;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            out.blocks.push_back(block_from_json(nlohmann::json::parse(lines[i])));
        } catch (const nlohmann::json::exception& e) {
            out.unreadable_index = i;
            out.error = e.what();
            break;
        } catch (const CorruptDataError& e) {
            out.unreadable_index = i;
            out.error = e.what();
            break;
        }
    }
    return out;
}

VerifyResult verify_chain_file(const std::filesystem::path& path) {
    const auto file = read_chain_file(path);
    auto result = verify_chain(file.blocks);
    if (result.ok && file.unreadable_index) {
        return VerifyResult{false, file.unreadable_index, "unreadable block record: " + file.error};
    }
    if (result.ok && file.blocks.empty()) return VerifyResult{false, 0, "chain has no genesis block"};
    return result;
}

Ledger::Ledger(LedgerConfig config)
    : chain_(config.genesis_timestamp_ms, std::move(config.opening_balances)) {}

Ledger::Ledger(std::filesystem::path directory, LedgerConfig config) : directory_(std::move(directory)) {
    std::filesystem::create_directories(*directory_);
    const auto accounts_path = *directory_ / kAccountsFile;
    const auto chain_path = *directory_ / kChainFile;

    Balances opening = read_opening_balances(accounts_path);
    bool accounts_changed = !std::filesystem::exists(accounts_path);
    for (const auto& [account, amount] : config.opening_balances) {
        if (opening.try_emplace(account, amount).second) accounts_changed = true;
    }
    if (accounts_changed) write_opening_balances(accounts_path, opening);

    if (std::filesystem::exists(chain_path)) {
        auto file = read_chain_file(chain_path);
        if (file.unreadable_index) {
            throw CorruptDataError(chain_path.string() + ": unreadable block at line " +
                                   std::to_string(*file.unreadable_index) + ": " + file.error);
        }
        chain_ = Chain::from_blocks(std::move(file.blocks), std::move(opening));
    } else {
        chain_ = Chain(config.genesis_timestamp_ms, std::move(opening));
        append_block_line(chain_path, chain_.head());
    }
}

Block Ledger::append(std::vector<Transaction> transactions, std::int64_t timestamp_ms) {
    std::unique_lock lock(mutex_);
    Chain next = chain_;
    const Block block = next.add_block(std::move(transactions), timestamp_ms);
    if (directory_) append_block_line(*directory_ / kChainFile, block);
    chain_ = std::move(next);
    return block;
}

std::vector<Block> Ledger::blocks() const {
    std::shared_lock lock(mutex_);
    return chain_.blocks();
}

std::optional<Block> Ledger::block(std::uint64_t index) const {
    std::shared_lock lock(mutex_);
    if (index >= chain_.size()) return std::nullopt;
    return chain_.blocks()[index];
}

Block Ledger::head() const {
    std::shared_lock lock(mutex_);
    return chain_.head();
}

std::size_t Ledger::size() const {
    std::shared_lock lock(mutex_);
    return chain_.size();
}

std::int64_t Ledger::balance(std::string_view account) const {
    std::shared_lock lock(mutex_);
    return chain_.balance(account);
}

Balances Ledger::balances() const {
    std::shared_lock lock(mutex_);
    return chain_.balances();
}

bool Ledger::has_account(std::string_view account) const {
    std::shared_lock lock(mutex_);
    return chain_.balances().find(account) != chain_.balances().end();
}

VerifyResult Ledger::verify() const {
    std::vector<Block> snapshot;
    {
        std::shared_lock lock(mutex_);
        snapshot = chain_.blocks();
    }
    return verify_chain(snapshot);
}

std::optional<std::uint64_t> Ledger::find_transaction(const Hash32& tx_id) const {
    std::shared_lock lock(mutex_);
    for (const auto& b : chain_.blocks()) {
        for (const auto& tx : b.transactions) {
            if (tx.tx_id == tx_id) return b.index;
        }
    }
    return std::nullopt;
}

} // namespace watt::ledger
