#include "watt/billing/tariff.hpp"

#include "watt/common/errors.hpp"
#include "watt/common/io.hpp"

#include <cmath>
#include <set>

namespace watt::billing {

std::int64_t Tariff::total_rate_paise_per_kwh() const {
    std::int64_t total = 0;
    for (const auto& h : heads) total += h.rate_paise_per_kwh;
    return total;
}

void Tariff::validate() const {
    if (name.empty()) throw ConfigError("tariff needs a name");
    if (heads.empty()) throw ConfigError("tariff '" + name + "' has no cost heads");
    std::set<std::string> seen;
    for (const auto& h : heads) {
        if (h.rate_paise_per_kwh < 0) throw ConfigError("tariff '" + name + "': negative rate for " + h.name);
        if (!seen.insert(h.name).second) throw ConfigError("tariff '" + name + "': duplicate head " + h.name);
    }
}

Tariff state_tariff() {
    return {"state",
            {{"cost_of_power", 470}, {"employee", 51}, {"interest", 41}, {"depreciation", 21}, {"other", 26}}};
}

Tariff private_tariff() {
    return {"private",
            {{"cost_of_power", 517}, {"employee", 49}, {"interest", 57}, {"depreciation", 30}, {"other", 47}}};
}

nlohmann::ordered_json to_json(const Tariff& t) {
    nlohmann::ordered_json j;
    j["name"] = t.name;
    j["heads"] = nlohmann::ordered_json::array();
    for (const auto& h : t.heads) {
        j["heads"].push_back({{"name", h.name}, {"rate_paise_per_kwh", h.rate_paise_per_kwh}});
    }
    j["total_rate_paise_per_kwh"] = t.total_rate_paise_per_kwh();
    return j;
}

Tariff tariff_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("name") || !j["name"].is_string() || !j.contains("heads") ||
        !j["heads"].is_array()) {
        throw ConfigError("tariff must be an object with 'name' and 'heads'");
    }
    Tariff t;
    t.name = j["name"].get<std::string>();
    for (const auto& h : j["heads"]) {
        if (!h.is_object() || !h.contains("name") || !h["name"].is_string() || !h.contains("rate_paise_per_kwh") ||
            !h["rate_paise_per_kwh"].is_number_integer()) {
            throw ConfigError("tariff head needs 'name' and integer 'rate_paise_per_kwh'");
        }
        t.heads.push_back({h["name"].get<std::string>(), h["rate_paise_per_kwh"].get<std::int64_t>()});
    }
    t.validate();
    return t;
}

TariffBook::TariffBook() {
    add(state_tariff());
    add(private_tariff());
}

void TariffBook::add(Tariff t) {
    t.validate();
    auto name = t.name;
    tariffs_.insert_or_assign(std::move(name), std::move(t));
}

void TariffBook::load_file(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("tariffs") || !j["tariffs"].is_array()) {
        throw ConfigError(path.string() + ": expected {\"tariffs\": [...]}");
    }
    for (const auto& t : j["tariffs"]) add(tariff_from_json(t));
}

const Tariff& TariffBook::get(std::string_view name) const {
    const auto it = tariffs_.find(name);
    if (it == tariffs_.end()) throw NotFoundError("unknown tariff '" + std::string(name) + "'");
    return it->second;
}

std::vector<std::string> TariffBook::names() const {
    std::vector<std::string> out;
    for (const auto& [name, t] : tariffs_) out.push_back(name);
    return out;
}

std::int64_t round_half_even(double x) {
    if (!std::isfinite(x)) throw DomainError("cannot round a non-finite amount");
    const double floor = std::floor(x);
    const double diff = x - floor;
    double result = floor;
    if (diff > 0.5) {
        result = floor + 1.0;
    } else if (diff == 0.5) {
        result = std::fmod(floor, 2.0) == 0.0 ? floor : floor + 1.0;
    }
    return static_cast<std::int64_t>(result);
}

} // namespace watt::billing
