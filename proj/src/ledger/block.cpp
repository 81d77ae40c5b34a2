#include "watt/ledger/block.hpp"

#include "watt/common/errors.hpp"

#include <limits>

namespace watt::ledger {

namespace {

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void u32(std::uint32_t v) { be(v, 4); }
    void u64(std::uint64_t v) { be(v, 8); }
    void i64(std::int64_t v) { be(static_cast<std::uint64_t>(v), 8); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

    void string(const std::string& s) {
        if (s.size() > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("account name too long");
        u32(static_cast<std::uint32_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }

private:
    void be(std::uint64_t v, int width) {
        for (int shift = 8 * (width - 1); shift >= 0; shift -= 8) {
            out_.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
        }
    }

    std::vector<std::uint8_t>& out_;
};

void append_tx(ByteWriter& w, const Transaction& tx) {
    w.string(tx.from_account);
    w.string(tx.to_account);
    w.u64(tx.amount_paise);
    w.u64(tx.gas);
    w.bytes(tx.payload_hash);
    w.i64(tx.timestamp_ms);
}

} // namespace

std::uint64_t compute_gas(std::size_t payload_bytes) {
    return kBaseGas + kGasPerPayloadByte * static_cast<std::uint64_t>(payload_bytes);
}

std::vector<std::uint8_t> canonical_bytes(const Transaction& tx) {
    std::vector<std::uint8_t> out;
    ByteWriter w(out);
    append_tx(w, tx);
    return out;
}

Hash32 compute_tx_id(const Transaction& tx) { return sha256(canonical_bytes(tx)); }

Transaction make_transaction(std::string from_account, std::string to_account, std::uint64_t amount_paise,
                             std::string_view payload, std::int64_t timestamp_ms) {
    Transaction tx;
    tx.from_account = std::move(from_account);
    tx.to_account = std::move(to_account);
    tx.amount_paise = amount_paise;
    tx.gas = compute_gas(payload.size());
    tx.payload_hash = sha256(payload);
    tx.timestamp_ms = timestamp_ms;
    tx.tx_id = compute_tx_id(tx);
    return tx;
}

std::vector<std::uint8_t> canonical_bytes(const Block& block) {
    std::vector<std::uint8_t> out;
    ByteWriter w(out);
    w.u32(kBlockFormatVersion);
    w.u64(block.index);
    w.i64(block.timestamp_ms);
    w.bytes(block.prev_hash);
    if (block.transactions.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw ValidationError("too many transactions in block");
    }
    w.u32(static_cast<std::uint32_t>(block.transactions.size()));
    for (const auto& tx : block.transactions) append_tx(w, tx);
    return out;
}

Hash32 hash_block(const Block& block) { return sha256(canonical_bytes(block)); }

Block genesis(std::int64_t timestamp_ms) {
    Block b;
    b.index = 0;
    b.timestamp_ms = timestamp_ms;
    b.prev_hash = kZeroHash;
    b.gas_total = 0;
    b.hash = hash_block(b);
    return b;
}

nlohmann::ordered_json to_json(const Transaction& tx) {
    nlohmann::ordered_json j;
    j["tx_id"] = to_hex(tx.tx_id);
    j["from_account"] = tx.from_account;
    j["to_account"] = tx.to_account;
    j["amount_paise"] = tx.amount_paise;
    j["gas"] = tx.gas;
    j["payload_hash"] = to_hex(tx.payload_hash);
    j["timestamp_ms"] = tx.timestamp_ms;
    return j;
}

nlohmann::ordered_json to_json(const Block& block) {
    nlohmann::ordered_json j;
    j["index"] = block.index;
    j["timestamp_ms"] = block.timestamp_ms;
    j["prev_hash"] = to_hex(block.prev_hash);
    auto txs = nlohmann::ordered_json::array();
    for (const auto& tx : block.transactions) txs.push_back(to_json(tx));
    j["transactions"] = std::move(txs);
    j["gas_total"] = block.gas_total;
    j["hash"] = to_hex(block.hash);
    return j;
}

namespace {

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw CorruptDataError(std::string("ledger record missing '") + key + "'");
    return *it;
}

std::uint64_t unsigned_field(const nlohmann::json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_unsigned()) throw CorruptDataError(std::string("'") + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::int64_t integer_field(const nlohmann::json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_integer()) throw CorruptDataError(std::string("'") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

std::string string_field(const nlohmann::json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_string()) throw CorruptDataError(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

Hash32 hash_field(const nlohmann::json& j, const char* key) {
    try {
        return hash_from_hex(string_field(j, key));
    } catch (const ValidationError& e) {
        throw CorruptDataError(std::string("'") + key + "': " + e.what());
    }
}

} // namespace

Transaction transaction_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw CorruptDataError("transaction must be an object");
    Transaction tx;
    tx.tx_id = hash_field(j, "tx_id");
    tx.from_account = string_field(j, "from_account");
    tx.to_account = string_field(j, "to_account");
    tx.amount_paise = unsigned_field(j, "amount_paise");
    tx.gas = unsigned_field(j, "gas");
    tx.payload_hash = hash_field(j, "payload_hash");
    tx.timestamp_ms = integer_field(j, "timestamp_ms");
    return tx;
}

Block block_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw CorruptDataError("block must be an object");
    Block b;
    b.index = unsigned_field(j, "index");
    b.timestamp_ms = integer_field(j, "timestamp_ms");
    b.prev_hash = hash_field(j, "prev_hash");
    const auto& txs = field(j, "transactions");
    if (!txs.is_array()) throw CorruptDataError("'transactions' must be an array");
    for (const auto& tx : txs) b.transactions.push_back(transaction_from_json(tx));
    b.gas_total = unsigned_field(j, "gas_total");
    b.hash = hash_field(j, "hash");
    return b;
}

} // namespace watt::ledger
