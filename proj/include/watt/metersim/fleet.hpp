#pragma once

#include "watt/metersim/energy.hpp"
#include "watt/metersim/gaussian.hpp"
#include "watt/metersim/profile.hpp"
#include "watt/metersim/reading.hpp"

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace watt::metersim {

inline constexpr double kNominalVoltage = 230.0;

struct MeterSpec {
    std::string meter_id;
    ApplianceProfile profile;
    bool relay_on = true;
};

struct MeterState {
    std::string meter_id;
    ApplianceProfile profile;
    bool relay_on = true;
    EnergyAccumulator accumulator;
    GaussianSource noise;
};

// Takes one sample from `meter` at `now_ms` and advances its accumulator.
// Both noise draws are consumed on every call, so toggling the relay never
// shifts the noise stream of later samples.
MeterReading sample_meter(MeterState& meter, std::int64_t now_ms);

// A set of simulated meters advanced together. Thread-safe: relay commands
// may arrive from another thread while the owner calls step().
class Fleet {
public:
    Fleet(std::uint64_t seed, const std::vector<MeterSpec>& meters);

    Fleet(const Fleet&) = delete;
    Fleet& operator=(const Fleet&) = delete;

    // One reading per meter, in fleet order. Throws PreconditionError unless
    // now_ms is strictly after the previous step.
    std::vector<MeterReading> step(std::int64_t now_ms);

    // Idempotent. Throws NotFoundError for an unknown meter. Returns the new state.
    bool set_relay(std::string_view meter_id, bool on);
    bool relay(std::string_view meter_id) const;

    // Continues a meter's cumulative kWh from an earlier run. The next sample
    // only anchors the energy clock, so the gap is not integrated. Throws
    // NotFoundError for an unknown meter and DomainError for negative kWh.
    void resume_energy(std::string_view meter_id, double kwh);

    bool contains(std::string_view meter_id) const;
    std::vector<std::string> meter_ids() const;
    std::optional<std::int64_t> last_step_ms() const;

    // Copy of the per-meter state, for inspection.
    std::vector<MeterState> snapshot() const;

private:
    MeterState& find(std::string_view meter_id);
    const MeterState& find(std::string_view meter_id) const;

    mutable std::mutex mutex_;
    std::vector<MeterState> meters_;
    std::optional<std::int64_t> last_step_ms_;
};

} // namespace watt::metersim
