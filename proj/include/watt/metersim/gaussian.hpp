#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace watt::metersim {

// Standard-normal draws from mt19937_64 via Box-Muller. The transform is
// spelled out here because std::normal_distribution is not required to
// produce the same sequence across standard library implementations.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

    double next();

    bool operator==(const GaussianSource&) const = default;

private:
    double uniform_open_closed(); // (0, 1]
    double uniform_closed_open(); // [0, 1)

    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

// Stream seed for one meter: a SplitMix64 mix of the scenario seed and an
// FNV-1a hash of the meter id, so meters keep their noise streams when the
// fleet is reordered.
std::uint64_t derive_meter_seed(std::uint64_t scenario_seed, std::string_view meter_id);

} // namespace watt::metersim
