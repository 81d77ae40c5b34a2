#include "watt/api/service.hpp"

#include "watt/common/time_format.hpp"

namespace watt::api {

Service::Service(ServiceConfig config) : clock_(config.clock ? std::move(config.clock) : now_millis) {
    if (config.data_dir) {
        const auto& dir = *config.data_dir;
        store_ = std::make_unique<ingest::Store>(dir / "readings");
        ledger_ = std::make_unique<ledger::Ledger>(dir / "ledger", std::move(config.ledger));
        billing_ = std::make_unique<billing::BillingService>(*store_, *ledger_, std::move(config.billing), dir / "billing");
    } else {
        store_ = std::make_unique<ingest::Store>();
        ledger_ = std::make_unique<ledger::Ledger>(std::move(config.ledger));
        billing_ = std::make_unique<billing::BillingService>(*store_, *ledger_, std::move(config.billing));
    }
    if (config.tariff_file) tariffs_.load_file(*config.tariff_file);
}

std::int64_t Service::now() const { return clock_(); }

} // namespace watt::api
