#include "watt/billing/invoice.hpp"

#include "watt/common/errors.hpp"

#include <cmath>

namespace watt::billing {

void Period::validate() const {
    if (start_ms >= end_ms) throw ValidationError("billing period must have start < end");
}

std::string to_string(InvoiceStatus s) { return s == InvoiceStatus::paid ? "paid" : "issued"; }

std::string invoice_id_for(const std::string& meter_id, const Period& period) {
    return "inv-" + meter_id + "-" + std::to_string(period.start_ms) + "-" + std::to_string(period.end_ms);
}

Invoice compute_invoice(double kwh, const Tariff& tariff, const std::string& meter_id, const Period& period) {
    if (!std::isfinite(kwh) || kwh < 0.0) throw DomainError("kwh to bill must be finite and >= 0");
    Invoice inv;
    inv.invoice_id = invoice_id_for(meter_id, period);
    inv.meter_id = meter_id;
    inv.period = period;
    inv.tariff = tariff.name;
    inv.kwh_billed = kwh;
    inv.account = meter_id;
    for (const auto& head : tariff.heads) {
        const auto amount = round_half_even(static_cast<double>(head.rate_paise_per_kwh) * kwh);
        inv.lines.push_back({head.name, amount});
        inv.total_paise += amount;
    }
    return inv;
}

namespace {

nlohmann::ordered_json document_json(const Invoice& inv) {
    nlohmann::ordered_json j;
    j["invoice_id"] = inv.invoice_id;
    j["meter_id"] = inv.meter_id;
    j["account"] = inv.account;
    j["period_start_ms"] = inv.period.start_ms;
    j["period_end_ms"] = inv.period.end_ms;
    j["tariff"] = inv.tariff;
    j["kwh_billed"] = inv.kwh_billed;
    j["lines"] = nlohmann::ordered_json::array();
    for (const auto& l : inv.lines) j["lines"].push_back({{"head", l.head}, {"amount_paise", l.amount_paise}});
    j["total_paise"] = inv.total_paise;
    return j;
}

template <typename T>
T required(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw CorruptDataError(std::string("invoice record missing '") + key + "'");
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw CorruptDataError(std::string("invoice field '") + key + "' has the wrong type");
    }
}

} // namespace

std::string invoice_document(const Invoice& invoice) { return document_json(invoice).dump(); }

nlohmann::ordered_json to_json(const Invoice& inv) {
    auto j = document_json(inv);
    j["status"] = to_string(inv.status);
    j["issue_tx"] = inv.issue_tx ? nlohmann::ordered_json(ledger::to_hex(*inv.issue_tx)) : nullptr;
    j["issue_block"] = inv.issue_block ? nlohmann::ordered_json(*inv.issue_block) : nullptr;
    j["payment_tx"] = inv.payment_tx ? nlohmann::ordered_json(ledger::to_hex(*inv.payment_tx)) : nullptr;
    j["payment_block"] = inv.payment_block ? nlohmann::ordered_json(*inv.payment_block) : nullptr;
    return j;
}

Invoice invoice_from_json(const nlohmann::json& j) {
    Invoice inv;
    inv.invoice_id = required<std::string>(j, "invoice_id");
    inv.meter_id = required<std::string>(j, "meter_id");
    inv.account = required<std::string>(j, "account");
    inv.period = {required<std::int64_t>(j, "period_start_ms"), required<std::int64_t>(j, "period_end_ms")};
    inv.tariff = required<std::string>(j, "tariff");
    inv.kwh_billed = required<double>(j, "kwh_billed");
    for (const auto& l : required<nlohmann::json>(j, "lines")) {
        inv.lines.push_back({required<std::string>(l, "head"), required<std::int64_t>(l, "amount_paise")});
    }
    inv.total_paise = required<std::int64_t>(j, "total_paise");
    const auto status = required<std::string>(j, "status");
    if (status != "issued" && status != "paid") throw CorruptDataError("invoice status '" + status + "'");
    inv.status = status == "paid" ? InvoiceStatus::paid : InvoiceStatus::issued;
    auto opt_hash = [&](const char* key) -> std::optional<ledger::Hash32> {
        const auto it = j.find(key);
        if (it == j.end() || it->is_null()) return std::nullopt;
        return ledger::hash_from_hex(it->get<std::string>());
    };
    auto opt_index = [&](const char* key) -> std::optional<std::uint64_t> {
        const auto it = j.find(key);
        if (it == j.end() || it->is_null()) return std::nullopt;
        return it->get<std::uint64_t>();
    };
    inv.issue_tx = opt_hash("issue_tx");
    inv.issue_block = opt_index("issue_block");
    inv.payment_tx = opt_hash("payment_tx");
    inv.payment_block = opt_index("payment_block");
    return inv;
}

} // namespace watt::billing
