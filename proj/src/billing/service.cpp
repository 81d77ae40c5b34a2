#include "watt/billing/service.hpp"

#include "watt/common/errors.hpp"
#include "watt/common/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace watt::billing {

Period calendar_month(std::int64_t t_ms) {
    using namespace std::chrono;
    const sys_days day = floor<days>(sys_time<milliseconds>(milliseconds(t_ms)));
    const year_month_day ymd(day);
    const sys_days first = ymd.year() / ymd.month() / 1;
    const sys_days next = (ymd.year() / ymd.month() + months(1)) / 1;
    return {duration_cast<milliseconds>(first.time_since_epoch()).count(),
            duration_cast<milliseconds>(next.time_since_epoch()).count()};
}

nlohmann::ordered_json to_json(const Goal& goal) {
    return {{"meter_id", goal.meter_id},
            {"period_start_ms", goal.period.start_ms},
            {"period_end_ms", goal.period.end_ms},
            {"kwh_target", goal.kwh_target}};
}

nlohmann::ordered_json to_json(const GoalProgress& p) {
    auto j = to_json(p.goal);
    j["kwh_used"] = p.kwh_used;
    j["fraction_of_target"] = p.fraction_of_target;
    j["elapsed_fraction"] = p.elapsed_fraction;
    j["projected_kwh"] = p.projected_kwh;
    j["projected_overshoot"] = p.projected_overshoot;
    j["projection"] = p.projection;
    return j;
}

nlohmann::ordered_json to_json(const PeakEvent& e) {
    return {{"timestamp_ms", e.timestamp_ms},
            {"aggregate_power_va", e.aggregate_power_va},
            {"threshold_va", e.threshold_va}};
}

nlohmann::ordered_json to_json(const PaymentReceipt& r) {
    return {{"invoice_id", r.invoice_id},
            {"tx_id", ledger::to_hex(r.tx_id)},
            {"gas", r.gas},
            {"block_index", r.block_index},
            {"block_hash", ledger::to_hex(r.block_hash)},
            {"amount_paise", r.amount_paise}};
}

std::vector<PeakEvent> detect_peaks(const TimeSeries& aggregate, double threshold_va) {
    if (!(threshold_va > 0.0) || !std::isfinite(threshold_va)) throw DomainError("peak threshold must be > 0");
    std::vector<PeakEvent> events;
    for (std::size_t i = 0; i < aggregate.size(); ++i) {
        const auto& v = aggregate.values[i];
        if (v && *v > threshold_va) events.push_back({aggregate.timestamps[i], *v, threshold_va});
    }
    return events;
}

TimeSeries aggregate_demand(const ingest::Store& store, std::int64_t from_ms, std::int64_t to_ms,
                            std::int64_t step_ms) {
    if (step_ms <= 0) throw ValidationError("step must be > 0");
    if (from_ms >= to_ms) throw ValidationError("range must have from < to");
    TimeSeries total;
    for (const auto& meter : store.meter_ids()) {
        ingest::SeriesQuery q;
        q.meter_id = meter;
        q.from_ms = from_ms;
        q.to_ms = to_ms;
        q.step_ms = step_ms;
        q.agg = Aggregation::mean;
        q.field = ingest::Field::apparent_power;
        const auto series = store.query_series(q);
        if (total.empty()) {
            total = series;
            continue;
        }
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (!series.values[i]) continue;
            auto& slot = total.values[i];
            slot = slot.value_or(0.0) + *series.values[i];
        }
    }
    return total;
}

double kwh_at(const ingest::Store& store, std::string_view meter_id, std::int64_t t_ms) {
    const auto r = store.reading_at_or_before(meter_id, t_ms);
    return r ? r->kwh_total : 0.0;
}

BillingService::BillingService(ingest::Store& store, ledger::Ledger& ledger, BillingConfig config,
                               std::optional<std::filesystem::path> directory)
    : store_(store), ledger_(ledger), config_(std::move(config)), directory_(std::move(directory)) {
    if (config_.utility_account.empty()) throw ConfigError("utility account must be named");
    if (directory_) {
        std::filesystem::create_directories(*directory_);
        load();
    }
}

std::string BillingService::account_for(std::string_view meter_id) const {
    const auto it = config_.meter_accounts.find(meter_id);
    return it != config_.meter_accounts.end() ? it->second : std::string(meter_id);
}

BillingRun BillingService::run_billing_cycle(const Period& period, const Tariff& tariff, std::int64_t now_ms) {
    period.validate();
    tariff.validate();
    if (period.end_ms > now_ms) throw PreconditionError("billing period has not closed yet");

    std::lock_guard write(write_mutex_);
    BillingRun run;
    std::vector<Invoice> fresh;
    std::vector<ledger::Transaction> txs;
    {
        std::shared_lock lock(mutex_);
        for (const auto& meter : store_.meter_ids()) {
            const auto id = invoice_id_for(meter, period);
            if (const auto it = invoices_.find(id); it != invoices_.end()) {
                run.invoices.push_back(it->second);
                continue;
            }
            const double used = kwh_at(store_, meter, period.end_ms) - kwh_at(store_, meter, period.start_ms);
            if (used < 0.0) throw DomainError("cumulative kWh of meter '" + meter + "' decreased during the period");
            auto inv = compute_invoice(used, tariff, meter, period);
            inv.account = account_for(meter);
            auto tx = ledger::make_transaction(inv.account, config_.utility_account, 0, invoice_document(inv), now_ms);
            inv.issue_tx = tx.tx_id;
            txs.push_back(std::move(tx));
            fresh.push_back(std::move(inv));
        }
    }
    const auto by_meter = [](const Invoice& a, const Invoice& b) { return a.meter_id < b.meter_id; };
    if (fresh.empty()) {
        std::sort(run.invoices.begin(), run.invoices.end(), by_meter);
        return run;
    }

    auto block = ledger_.append(std::move(txs), now_ms);
    {
        std::unique_lock lock(mutex_);
        for (auto& inv : fresh) {
            inv.issue_block = block.index;
            invoices_.emplace(inv.invoice_id, inv);
            run.invoices.push_back(std::move(inv));
        }
        save_invoices();
    }
    std::sort(run.invoices.begin(), run.invoices.end(), by_meter);
    run.block = std::move(block);
    return run;
}

PaymentReceipt BillingService::pay_invoice(const std::string& invoice_id, const std::string& payer,
                                           std::int64_t now_ms) {
    if (payer.empty()) throw ValidationError("payer account must be named");
    std::lock_guard write(write_mutex_);
    const auto inv = invoice(invoice_id);
    if (inv.status == InvoiceStatus::paid) throw ConflictError("invoice '" + invoice_id + "' is already paid");

    nlohmann::ordered_json doc;
    doc["invoice_id"] = inv.invoice_id;
    doc["issue_tx"] = inv.issue_tx ? ledger::to_hex(*inv.issue_tx) : "";
    doc["amount_paise"] = inv.total_paise;
    auto tx = ledger::make_transaction(payer, config_.utility_account, static_cast<std::uint64_t>(inv.total_paise),
                                       doc.dump(), now_ms);
    const auto block = ledger_.append({tx}, now_ms);

    std::unique_lock lock(mutex_);
    auto& stored = invoices_.at(invoice_id);
    stored.status = InvoiceStatus::paid;
    stored.payment_tx = tx.tx_id;
    stored.payment_block = block.index;
    save_invoices();
    return {invoice_id, tx.tx_id, tx.gas, block.index, block.hash, inv.total_paise};
}

Invoice BillingService::invoice(const std::string& invoice_id) const {
    std::shared_lock lock(mutex_);
    const auto it = invoices_.find(invoice_id);
    if (it == invoices_.end()) throw NotFoundError("unknown invoice '" + invoice_id + "'");
    return it->second;
}

std::vector<Invoice> BillingService::invoices(std::optional<std::string> meter_id, std::optional<Period> period) const {
    std::shared_lock lock(mutex_);
    std::vector<Invoice> out;
    for (const auto& [id, inv] : invoices_) {
        if (meter_id && inv.meter_id != *meter_id) continue;
        if (period && inv.period != *period) continue;
        out.push_back(inv);
    }
    std::sort(out.begin(), out.end(), [](const Invoice& a, const Invoice& b) {
        return std::tie(a.period.start_ms, a.meter_id, a.period.end_ms) <
               std::tie(b.period.start_ms, b.meter_id, b.period.end_ms);
    });
    return out;
}

Goal BillingService::set_goal(const std::string& meter_id, const Period& period, double kwh_target) {
    ingest::validate_meter_id(meter_id);
    period.validate();
    if (!(kwh_target > 0.0) || !std::isfinite(kwh_target)) throw ValidationError("kwh_target must be > 0");
    Goal goal{meter_id, period, kwh_target};
    std::unique_lock lock(mutex_);
    goals_.insert_or_assign({meter_id, period}, goal);
    save_goals();
    return goal;
}

std::optional<Goal> BillingService::active_goal(std::string_view meter_id, std::int64_t now_ms) const {
    std::shared_lock lock(mutex_);
    for (const auto& [key, goal] : goals_) {
        if (goal.meter_id == meter_id && goal.period.contains(now_ms)) return goal;
    }
    return std::nullopt;
}

std::vector<Goal> BillingService::goals(std::optional<std::string> meter_id) const {
    std::shared_lock lock(mutex_);
    std::vector<Goal> out;
    for (const auto& [key, goal] : goals_) {
        if (!meter_id || goal.meter_id == *meter_id) out.push_back(goal);
    }
    return out;
}

GoalProgress BillingService::goal_progress(const std::string& meter_id, const Period& period, std::int64_t now_ms,
                                           const Projector* projector) const {
    GoalProgress p;
    {
        std::shared_lock lock(mutex_);
        const auto it = goals_.find({meter_id, period});
        if (it == goals_.end()) throw NotFoundError("no goal for meter '" + meter_id + "' in that period");
        p.goal = it->second;
    }
    const auto upto = std::clamp(now_ms, period.start_ms, period.end_ms);
    p.kwh_used = std::max(0.0, kwh_at(store_, meter_id, upto) - kwh_at(store_, meter_id, period.start_ms));
    p.fraction_of_target = p.kwh_used / p.goal.kwh_target;
    p.elapsed_fraction =
        static_cast<double>(upto - period.start_ms) / static_cast<double>(period.end_ms - period.start_ms);
    if (projector) {
        p.projection = projector->name;
        p.projected_kwh = projector->project(p.goal, now_ms, p.kwh_used);
    } else {
        p.projection = "linear";
        p.projected_kwh = p.elapsed_fraction > 0.0 ? p.kwh_used / p.elapsed_fraction : p.kwh_used;
    }
    p.projected_overshoot = p.projected_kwh > p.goal.kwh_target;
    return p;
}

void BillingService::save_invoices() const {
    if (!directory_) return;
    nlohmann::ordered_json j;
    j["invoices"] = nlohmann::ordered_json::array();
    for (const auto& [id, inv] : invoices_) j["invoices"].push_back(to_json(inv));
    write_file_atomic(*directory_ / "invoices.json", j.dump(2) + "\n");
}

void BillingService::save_goals() const {
    if (!directory_) return;
    nlohmann::ordered_json j;
    j["goals"] = nlohmann::ordered_json::array();
    for (const auto& [key, goal] : goals_) j["goals"].push_back(to_json(goal));
    write_file_atomic(*directory_ / "goals.json", j.dump(2) + "\n");
}

void BillingService::load() {
    const auto parse = [](const std::filesystem::path& path, const char* key) -> nlohmann::json {
        if (!std::filesystem::exists(path)) return nlohmann::json::array();
        try {
            auto j = nlohmann::json::parse(read_file(path));
            if (!j.is_object() || !j.contains(key) || !j[key].is_array()) {
                throw CorruptDataError(path.string() + ": expected an object with an array '" + key + "'");
            }
            return j[key];
        } catch (const nlohmann::json::exception& e) {
            throw CorruptDataError(path.string() + ": " + e.what());
        }
    };
    for (const auto& item : parse(*directory_ / "invoices.json", "invoices")) {
        auto inv = invoice_from_json(item);
        invoices_.emplace(inv.invoice_id, std::move(inv));
    }
    for (const auto& item : parse(*directory_ / "goals.json", "goals")) {
        try {
            Goal g{item.at("meter_id").get<std::string>(),
                   {item.at("period_start_ms").get<std::int64_t>(), item.at("period_end_ms").get<std::int64_t>()},
                   item.at("kwh_target").get<double>()};
            goals_.insert_or_assign({g.meter_id, g.period}, g);
        } catch (const nlohmann::json::exception& e) {
            throw CorruptDataError(std::string("goals.json: ") + e.what());
        }
    }
}

} // namespace watt::billing
