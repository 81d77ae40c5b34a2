#pragma once

#include "watt/billing/tariff.hpp"
#include "watt/ledger/hash.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace watt::billing {

// Half-open billing interval [start_ms, end_ms).
struct Period {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;

    void validate() const;
    bool contains(std::int64_t t) const { return t >= start_ms && t < end_ms; }

    bool operator==(const Period&) const = default;
    auto operator<=>(const Period&) const = default;
};

enum class InvoiceStatus { issued, paid };

std::string to_string(InvoiceStatus s);

struct InvoiceLine {
    std::string head;
    std::int64_t amount_paise = 0;

    bool operator==(const InvoiceLine&) const = default;
};

struct Invoice {
    std::string invoice_id;
    std::string meter_id;
    Period period;
    std::string tariff;
    double kwh_billed = 0.0;
    std::vector<InvoiceLine> lines;
    std::int64_t total_paise = 0;
    InvoiceStatus status = InvoiceStatus::issued;
    std::string account; // consumer account the invoice is addressed to
    std::optional<ledger::Hash32> issue_tx;
    std::optional<std::uint64_t> issue_block;
    std::optional<ledger::Hash32> payment_tx;
    std::optional<std::uint64_t> payment_block;

    bool operator==(const Invoice&) const = default;
};

// Deterministic id for a (meter, period) pair.
std::string invoice_id_for(const std::string& meter_id, const Period& period);

// Prices kwh against every head of the tariff. Each line is rounded half-even
// to whole paise; the total is the sum of the rounded lines. Throws
// DomainError for negative or non-finite kwh.
Invoice compute_invoice(double kwh, const Tariff& tariff, const std::string& meter_id, const Period& period);

// The immutable part of an invoice, serialized as the payload whose hash is
// recorded on the ledger.
std::string invoice_document(const Invoice& invoice);

nlohmann::ordered_json to_json(const Invoice& invoice);
Invoice invoice_from_json(const nlohmann::json& j);

} // namespace watt::billing
