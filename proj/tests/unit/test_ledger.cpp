#include <doctest.h>

#include "../support/block_mutation.hpp"
#include "../support/ledger_fixtures.hpp"
#include "watt/common/errors.hpp"
#include "watt/common/io.hpp"
#include "watt/ledger/ledger.hpp"

#include <filesystem>
#include <numeric>
#include <random>

using namespace watt;
using namespace watt::ledger;

namespace {

using testing::filled;
using testing::fixture_block;

Chain three_block_chain() {
    Chain chain(1000, {{"alice", 100'000}, {"bob", 5'000}});
    chain.add_block({make_transaction("alice", "utility", 60'900, "invoice-1", 2000)}, 2000);
    chain.add_block({make_transaction("bob", "utility", 0, "invoice-2", 3000),
                     make_transaction("alice", "bob", 100, "transfer", 3001)},
                    3000);
    return chain;
}

} // namespace

TEST_CASE("genesis block") {
    const auto g = genesis(0);
    CHECK(g.index == 0);
    CHECK(g.prev_hash == kZeroHash);
    CHECK(g.transactions.empty());
    CHECK(g.hash == genesis(0).hash);
    CHECK(g.hash != genesis(1).hash);
    CHECK(to_hex(g.hash) == "57c22d97befa25f51b2ae74d05259b0b6af8d0185e0c238f5a0999355b425b16");
}

TEST_CASE("gas is base cost plus per-byte cost") {
    CHECK(compute_gas(0) == 21000);
    CHECK(compute_gas(1) == 21016);
    CHECK(compute_gas(100) == 22600);
    const auto tx = make_transaction("a", "b", 5, std::string(37, 'x'), 0);
    CHECK(tx.gas == 21000 + 16 * 37);
    CHECK(tx.payload_hash == sha256(std::string(37, 'x')));
}

TEST_CASE("canonical bytes hash to the independently computed golden values") {
    const auto b = fixture_block();
    CHECK(to_hex(b.transactions[0].tx_id) == "a9fbd5becf856742438a0cbaa667041dfcd9cb8962995faecb838dca879d1ef8");
    CHECK(to_hex(b.transactions[1].tx_id) == "a2d7fe37196fc66577dcb7ef16b95027278b1674de9c69c42840cdb44eba2c99");
    CHECK(to_hex(b.hash) == "ecd33f50e646a033fd24246a29f2f0ef1726f18123ecfbf964d1d9500d1bdbcf");
    // 4 + 8 + 8 + 32 + 4 header bytes, then 2 * (4 + 4 + 8 + 8 + 32 + 8) + name lengths.
    CHECK(canonical_bytes(b).size() == 56 + 2 * 64 + 9 + 7 + 11 + 7);
}

TEST_CASE("hash_block is deterministic and sensitive to every content byte") {
    const auto b = fixture_block();
    CHECK(hash_block(b) == hash_block(fixture_block()));
    auto copy = b;
    copy.transactions[0].payload_hash[5] ^= 0x01;
    CHECK(hash_block(copy) != b.hash);
    copy = b;
    copy.transactions[1].from_account[0] ^= 0x20;
    CHECK(hash_block(copy) != b.hash);
}

TEST_CASE("hex round trip and validation") {
    const auto h = sha256(std::string_view("abc"));
    CHECK(to_hex(h) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(hash_from_hex(to_hex(h)) == h);
    CHECK_THROWS_AS(hash_from_hex("abc"), ValidationError);
    CHECK_THROWS_AS(hash_from_hex(std::string(64, 'g')), ValidationError);
}

TEST_CASE("add_block links, sums gas and moves balances") {
    Chain chain(0, {{"consumer", 100'000}});
    const auto genesis_hash = chain.head().hash;
    const auto tx1 = make_transaction("consumer", "utility", 60'900, "", 10);
    const auto tx2 = make_transaction("consumer", "utility", 0, std::string(100, 'p'), 11);
    REQUIRE(tx1.gas == 21000);
    REQUIRE(tx2.gas == 22600);

    const auto& b = chain.add_block({tx1, tx2}, 12);
    CHECK(b.index == 1);
    CHECK(b.prev_hash == genesis_hash);
    CHECK(b.gas_total == 43600);
    CHECK(b.hash == hash_block(b));
    CHECK(chain.balance("consumer") == 100'000 - 60'900);
    CHECK(chain.balance("utility") == 60'900);
    CHECK(chain.verify().ok);
}

TEST_CASE("add_block rejects bad batches without changing the chain") {
    Chain chain(0, {{"poor", 100}});
    CHECK_THROWS_AS(chain.add_block({}, 1), ValidationError);
    CHECK_THROWS_AS(chain.add_block({make_transaction("poor", "utility", 101, "x", 1)}, 1), InsufficientBalanceError);
    // The second transfer overdraws once the first has been applied.
    CHECK_THROWS_AS(chain.add_block({make_transaction("poor", "utility", 60, "x", 1),
                                     make_transaction("poor", "utility", 60, "y", 1)},
                                    1),
                    InsufficientBalanceError);
    CHECK_THROWS_AS(chain.add_block({make_transaction("nobody", "utility", 1, "x", 1)}, 1), InsufficientBalanceError);
    auto forged = make_transaction("poor", "utility", 1, "x", 1);
    forged.amount_paise = 2;
    CHECK_THROWS_AS(chain.add_block({forged}, 1), ValidationError);
    CHECK(chain.size() == 1);
    CHECK(chain.balance("poor") == 100);
}

TEST_CASE("verify_chain pinpoints tampering") {
    SUBCASE("untampered") { CHECK(three_block_chain().verify().ok); }

    SUBCASE("content byte in block 1") {
        auto blocks = three_block_chain().blocks();
        blocks[1].transactions[0].to_account[0] ^= 0x01;
        const auto r = verify_chain(blocks);
        CHECK_FALSE(r.ok);
        CHECK(r.first_bad_index == 1);
    }

    SUBCASE("re-hashed block 1 breaks the link to block 2") {
        auto blocks = three_block_chain().blocks();
        blocks[1].transactions[0].amount_paise = 1;
        blocks[1].transactions[0].tx_id = compute_tx_id(blocks[1].transactions[0]);
        blocks[1].hash = hash_block(blocks[1]);
        const auto r = verify_chain(blocks);
        CHECK_FALSE(r.ok);
        CHECK(r.first_bad_index == 2);
    }

    SUBCASE("gas_total edit") {
        auto blocks = three_block_chain().blocks();
        blocks[2].gas_total += 1;
        CHECK(verify_chain(blocks).first_bad_index == 2);
    }

    SUBCASE("removed block") {
        auto blocks = three_block_chain().blocks();
        blocks.erase(blocks.begin() + 1);
        CHECK(verify_chain(blocks).first_bad_index == 1);
    }
}

TEST_CASE("random single-byte mutations are always detected at the mutated block") {
    const auto pristine = three_block_chain().blocks();
    std::mt19937_64 gen(4242);
    for (int trial = 0; trial < 300; ++trial) {
        auto blocks = pristine;
        const auto which = std::uniform_int_distribution<std::size_t>(0, blocks.size() - 1)(gen);
        const auto pos = std::uniform_int_distribution<std::size_t>(0, testing::block_byte_count(blocks[which]) - 1)(gen);
        const auto mask = static_cast<std::uint8_t>(std::uniform_int_distribution<int>(1, 255)(gen));
        testing::mutate_block_byte(blocks[which], pos, mask);
        const auto r = verify_chain(blocks);
        REQUIRE_FALSE(r.ok);
        REQUIRE(r.first_bad_index == which);
    }
}

TEST_CASE("balances are conserved by every block") {
    std::mt19937_64 gen(9);
    Balances opening{{"a", 50'000}, {"b", 20'000}, {"c", 0}};
    Chain chain(0, opening);
    const std::vector<std::string> accounts{"a", "b", "c", "utility"};
    auto total = [&] {
        std::int64_t sum = 0;
        for (const auto& [acct, bal] : chain.balances()) sum += bal;
        return sum;
    };
    const auto initial = total();
    for (int i = 0; i < 200; ++i) {
        const auto& from = accounts[gen() % accounts.size()];
        const auto& to = accounts[gen() % accounts.size()];
        const auto amount = gen() % 3000;
        try {
            chain.add_block({make_transaction(from, to, amount, "t" + std::to_string(i), i)}, i);
        } catch (const InsufficientBalanceError&) {
        }
        REQUIRE(total() == initial);
        for (const auto& [acct, bal] : chain.balances()) REQUIRE(bal >= 0);
    }
    CHECK(chain.verify().ok);
}

TEST_CASE("block json round trip is byte-identical") {
    for (const auto& b : three_block_chain().blocks()) {
        const auto text = to_json(b).dump();
        const auto parsed = block_from_json(nlohmann::json::parse(text));
        CHECK(parsed == b);
        CHECK(to_json(parsed).dump() == text);
    }
    const auto b = fixture_block();
    CHECK(to_json(block_from_json(nlohmann::json::parse(to_json(b).dump()))).dump() == to_json(b).dump());
    CHECK_THROWS_AS(block_from_json(nlohmann::json::parse(R"({"index":-1})")), CorruptDataError);
}

TEST_CASE("persistent ledger reopens with identical blocks and balances") {
    const auto dir = std::filesystem::temp_directory_path() / "watt_ledger_persist";
    std::filesystem::remove_all(dir);
    Hash32 head;
    {
        Ledger ledger(dir, {500, {{"alice", 10'000}}});
        ledger.append({make_transaction("alice", "utility", 2'500, "inv", 600)}, 600);
        head = ledger.head().hash;
        CHECK(ledger.balance("alice") == 7'500);
    }
    {
        Ledger reopened(dir, {999, {{"alice", 1}, {"carol", 300}}});
        CHECK(reopened.size() == 2);
        CHECK(reopened.head().hash == head);
        CHECK(reopened.block(0)->timestamp_ms == 500);
        CHECK(reopened.balance("alice") == 7'500);
        CHECK(reopened.balance("carol") == 300);
        CHECK(reopened.verify().ok);
        CHECK(verify_chain_file(dir / "chain.ndjson").ok);
        const auto tx_id = reopened.block(1)->transactions[0].tx_id;
        CHECK(reopened.find_transaction(tx_id) == 1);
    }

    // Tamper with the amount on disk, then with the JSON syntax itself.
    auto lines = read_lines(dir / "chain.ndjson");
    const auto pos = lines[1].find("2500");
    REQUIRE(pos != std::string::npos);
    lines[1].replace(pos, 4, "2501");
    write_file_atomic(dir / "chain.ndjson", lines[0] + "\n" + lines[1] + "\n");
    auto verdict = verify_chain_file(dir / "chain.ndjson");
    CHECK_FALSE(verdict.ok);
    CHECK(verdict.first_bad_index == 1);

    write_file_atomic(dir / "chain.ndjson", lines[0] + "\n{not json\n");
    verdict = verify_chain_file(dir / "chain.ndjson");
    CHECK(verdict.first_bad_index == 1);
    CHECK_THROWS_AS(Ledger{dir}, CorruptDataError);
    std::filesystem::remove_all(dir);
}
