#include "watt/metersim/energy.hpp"

#include "watt/common/errors.hpp"

#include <cmath>
#include <string>

namespace watt::metersim {

double apparent_power(double v_rms, double i_rms) {
    if (!std::isfinite(v_rms) || !std::isfinite(i_rms)) {
        throw DomainError("apparent_power: inputs must be finite");
    }
    if (v_rms < 0.0 || i_rms < 0.0) {
        throw DomainError("apparent_power: inputs must be non-negative");
    }
    return v_rms * i_rms;
}

EnergyAccumulator accumulate_energy(EnergyAccumulator acc, double power_va, std::int64_t now_ms) {
    if (!std::isfinite(power_va) || power_va < 0.0) {
        throw DomainError("accumulate_energy: power must be finite and non-negative");
    }
    if (!acc.last_millis) {
        acc.last_millis = now_ms;
        return acc;
    }
    if (now_ms < *acc.last_millis) {
        throw ClockRegressionError("clock regression: sample at " + std::to_string(now_ms) +
                                   " ms precedes last sample at " + std::to_string(*acc.last_millis) + " ms");
    }
    const auto elapsed = static_cast<double>(now_ms - *acc.last_millis);
    acc.kwh = acc.kwh + (power_va * elapsed) / kVaMillisPerKwh;
    acc.last_millis = now_ms;
    return acc;
}

} // namespace watt::metersim
