#pragma once

#include <cstdint>
#include <optional>

namespace watt::metersim {

// Converts VA·ms into kWh: 3.6e6 ms per hour times 1e3 W per kW.
inline constexpr double kVaMillisPerKwh = 3600000000.0;

// Product of RMS voltage and RMS current. Throws DomainError on negative or
// non-finite input.
double apparent_power(double v_rms, double i_rms);

// Running energy total for one meter. `last_millis` is unset until the first
// sample arrives; that first sample only anchors the clock.
struct EnergyAccumulator {
    double kwh = 0.0;
    std::optional<std::int64_t> last_millis;

    bool operator==(const EnergyAccumulator&) const = default;
};

// kwh += power_va * (now_ms - last_millis) / 3.6e9, then last_millis = now_ms.
// Throws ClockRegressionError (leaving nothing changed, since the accumulator
// is taken by value) when now_ms precedes last_millis.
EnergyAccumulator accumulate_energy(EnergyAccumulator acc, double power_va, std::int64_t now_ms);

} // namespace watt::metersim
