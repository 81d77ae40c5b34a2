#pragma once

#include "watt/billing/service.hpp"
#include "watt/billing/tariff.hpp"
#include "watt/ingest/store.hpp"
#include "watt/ledger/ledger.hpp"
#include "watt/metersim/fleet.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>

namespace watt::api {

struct ServiceConfig {
    // Unset: everything lives in memory. Otherwise readings go to
    // <dir>/readings, the chain to <dir>/ledger and invoices to <dir>/billing.
    std::optional<std::filesystem::path> data_dir;
    ledger::LedgerConfig ledger;
    billing::BillingConfig billing;
    std::optional<std::filesystem::path> tariff_file;
    std::function<std::int64_t()> clock;
};

// The stores and services behind the HTTP API and the batch commands.
class Service {
public:
    explicit Service(ServiceConfig config = {});

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    ingest::Store& store() { return *store_; }
    const ingest::Store& store() const { return *store_; }
    ledger::Ledger& ledger() { return *ledger_; }
    const ledger::Ledger& ledger() const { return *ledger_; }
    billing::BillingService& billing() { return *billing_; }
    const billing::TariffBook& tariffs() const { return tariffs_; }

    std::int64_t now() const;

    // Relay commands are forwarded to this fleet. Pass nullptr to detach.
    // The fleet must outlive the attachment.
    void attach_fleet(metersim::Fleet* fleet) { fleet_.store(fleet); }
    metersim::Fleet* fleet() const { return fleet_.load(); }

private:
    std::function<std::int64_t()> clock_;
    std::unique_ptr<ingest::Store> store_;
    std::unique_ptr<ledger::Ledger> ledger_;
    std::unique_ptr<billing::BillingService> billing_;
    billing::TariffBook tariffs_;
    std::atomic<metersim::Fleet*> fleet_{nullptr};
};

} // namespace watt::api
