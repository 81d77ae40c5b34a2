#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace watt::billing {

struct CostHead {
    std::string name;
    std::int64_t rate_paise_per_kwh = 0;

    bool operator==(const CostHead&) const = default;
};

// Flat per-kWh price split into cost heads; the consumer price is the sum
// of the head rates.
struct Tariff {
    std::string name;
    std::vector<CostHead> heads;

    std::int64_t total_rate_paise_per_kwh() const;
    void validate() const;

    bool operator==(const Tariff&) const = default;
};

// 2019-20 distribution-utility cost structure, state sector: 6.09 Rs/kWh.
Tariff state_tariff();
// Same, private sector: 6.99 Rs/kWh.
Tariff private_tariff();

nlohmann::ordered_json to_json(const Tariff& t);
Tariff tariff_from_json(const nlohmann::json& j);

// Named tariffs: the two built-in presets plus any loaded from a JSON file
// of the form {"tariffs": [ {name, heads: [{name, rate_paise_per_kwh}]} ]}.
class TariffBook {
public:
    TariffBook();

    void add(Tariff t);
    void load_file(const std::filesystem::path& path);

    // Throws NotFoundError.
    const Tariff& get(std::string_view name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, Tariff, std::less<>> tariffs_;
};

// Rounds to the nearest integer, ties to even.
std::int64_t round_half_even(double x);

} // namespace watt::billing
