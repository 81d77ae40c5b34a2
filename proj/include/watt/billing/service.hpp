#pragma once

#include "watt/billing/invoice.hpp"
#include "watt/common/time_series.hpp"
#include "watt/ingest/store.hpp"
#include "watt/ledger/ledger.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace watt::billing {

// The UTC calendar month containing t.
Period calendar_month(std::int64_t t_ms);

struct Goal {
    std::string meter_id;
    Period period;
    double kwh_target = 0.0;

    bool operator==(const Goal&) const = default;
};

struct GoalProgress {
    Goal goal;
    double kwh_used = 0.0;
    double fraction_of_target = 0.0;
    double elapsed_fraction = 0.0;
    double projected_kwh = 0.0;
    bool projected_overshoot = false;
    std::string projection; // "linear" or the name given by a custom projector
};

// Estimates end-of-period consumption for a goal, given what has been used so
// far. Lets callers swap the linear rule for a forecast.
struct Projector {
    std::string name;
    std::function<double(const Goal& goal, std::int64_t now_ms, double kwh_used)> project;
};

struct PeakEvent {
    std::int64_t timestamp_ms = 0;
    double aggregate_power_va = 0.0;
    double threshold_va = 0.0;

    bool operator==(const PeakEvent&) const = default;
};

struct PaymentReceipt {
    std::string invoice_id;
    ledger::Hash32 tx_id{};
    std::uint64_t gas = 0;
    std::uint64_t block_index = 0;
    ledger::Hash32 block_hash{};
    std::int64_t amount_paise = 0;
};

struct BillingRun {
    std::vector<Invoice> invoices;
    // Block holding this run's new metadata transactions; empty when every
    // invoice already existed.
    std::optional<ledger::Block> block;
};

struct BillingConfig {
    std::string utility_account = "utility";
    // Consumer account per meter; meters not listed pay from an account named
    // after the meter.
    std::map<std::string, std::string, std::less<>> meter_accounts;
};

nlohmann::ordered_json to_json(const Goal& goal);
nlohmann::ordered_json to_json(const GoalProgress& progress);
nlohmann::ordered_json to_json(const PeakEvent& event);
nlohmann::ordered_json to_json(const PaymentReceipt& receipt);

// One event per defined sample strictly above the threshold. Throws
// DomainError unless threshold_va > 0.
std::vector<PeakEvent> detect_peaks(const TimeSeries& aggregate, double threshold_va);

// Sum over meters of bucket-mean apparent power on a common grid. Buckets in
// which no meter reported are missing.
TimeSeries aggregate_demand(const ingest::Store& store, std::int64_t from_ms, std::int64_t to_ms,
                            std::int64_t step_ms);

// Cumulative kWh of a meter at a boundary: the last reading at or before it,
// or 0 when there is none.
double kwh_at(const ingest::Store& store, std::string_view meter_id, std::int64_t t_ms);

class BillingService {
public:
    // With a directory, invoices and goals persist in <dir>/invoices.json and
    // <dir>/goals.json.
    BillingService(ingest::Store& store, ledger::Ledger& ledger, BillingConfig config = {},
                   std::optional<std::filesystem::path> directory = std::nullopt);

    BillingService(const BillingService&) = delete;
    BillingService& operator=(const BillingService&) = delete;

    // Issues one invoice per known meter and commits their metadata
    // transactions in a single block. Invoices that already exist for the
    // period are returned unchanged. Throws PreconditionError if the period
    // has not closed by now_ms.
    BillingRun run_billing_cycle(const Period& period, const Tariff& tariff, std::int64_t now_ms);

    // Throws NotFoundError, ConflictError when already paid, and
    // InsufficientBalanceError when the payer cannot cover the total.
    PaymentReceipt pay_invoice(const std::string& invoice_id, const std::string& payer, std::int64_t now_ms);

    Invoice invoice(const std::string& invoice_id) const;
    std::vector<Invoice> invoices(std::optional<std::string> meter_id = std::nullopt,
                                  std::optional<Period> period = std::nullopt) const;

    std::string account_for(std::string_view meter_id) const;
    const BillingConfig& config() const { return config_; }

    // Replaces any goal for the same meter and period. Throws ValidationError
    // unless kwh_target > 0.
    Goal set_goal(const std::string& meter_id, const Period& period, double kwh_target);
    // Goal whose period contains now_ms, if any.
    std::optional<Goal> active_goal(std::string_view meter_id, std::int64_t now_ms) const;
    std::vector<Goal> goals(std::optional<std::string> meter_id = std::nullopt) const;

    // Throws NotFoundError when no goal is set for the meter and period.
    GoalProgress goal_progress(const std::string& meter_id, const Period& period, std::int64_t now_ms,
                               const Projector* projector = nullptr) const;

private:
    void save_invoices() const;
    void save_goals() const;
    void load();

    ingest::Store& store_;
    ledger::Ledger& ledger_;
    BillingConfig config_;
    std::optional<std::filesystem::path> directory_;

    std::mutex write_mutex_; // one billing run or payment at a time
    mutable std::shared_mutex mutex_;
    std::map<std::string, Invoice> invoices_;
    std::map<std::pair<std::string, Period>, Goal> goals_;
};

} // namespace watt::billing
