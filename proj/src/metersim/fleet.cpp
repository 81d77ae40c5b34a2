#include "watt/metersim/fleet.hpp"

#include "watt/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace watt::metersim {

MeterReading sample_meter(MeterState& meter, std::int64_t now_ms) {
    const auto& profile = meter.profile;
    const double z_v = meter.noise.next();
    const double z_i = meter.noise.next();

    const double v_rms = std::max(0.0, kNominalVoltage + profile.noise_sigma_v * z_v);

    double i_rms = 0.0;
    if (meter.relay_on && profile.active_at(now_ms) && v_rms > 0.0) {
        const double demand_va = profile.rated_power / profile.power_factor;
        i_rms = demand_va / v_rms * (1.0 + profile.noise_sigma_frac_i * z_i);
        i_rms = std::clamp(i_rms, 0.0, kMaxCurrentAmps);
    }

    const double power = apparent_power(v_rms, i_rms);
    meter.accumulator = accumulate_energy(meter.accumulator, power, now_ms);

    return MeterReading{meter.meter_id, now_ms, v_rms, i_rms, power, meter.accumulator.kwh};
}

Fleet::Fleet(std::uint64_t seed, const std::vector<MeterSpec>& meters) {
    std::set<std::string> seen;
    meters_.reserve(meters.size());
    for (const auto& spec : meters) {
        if (spec.meter_id.empty()) throw ConfigError("meter_id must not be empty");
        if (!seen.insert(spec.meter_id).second) throw ConfigError("duplicate meter_id '" + spec.meter_id + "'");
        spec.profile.validate();
        meters_.push_back(MeterState{spec.meter_id, spec.profile, spec.relay_on, EnergyAccumulator{},
                                     GaussianSource(derive_meter_seed(seed, spec.meter_id))});
    }
}

std::vector<MeterReading> Fleet::step(std::int64_t now_ms) {
    std::lock_guard lock(mutex_);
    if (last_step_ms_ && now_ms <= *last_step_ms_) {
        throw PreconditionError("fleet step time must strictly increase");
    }
    std::vector<MeterReading> out;
    out.reserve(meters_.size());
    for (auto& meter : meters_) out.push_back(sample_meter(meter, now_ms));
    last_step_ms_ = now_ms;
    return out;
}

MeterState& Fleet::find(std::string_view meter_id) {
    auto it = std::find_if(meters_.begin(), meters_.end(), [&](const MeterState& m) { return m.meter_id == meter_id; });
    if (it == meters_.end()) throw NotFoundError("unknown meter '" + std::string(meter_id) + "'");
    return *it;
}

const MeterState& Fleet::find(std::string_view meter_id) const {
    return const_cast<Fleet*>(this)->find(meter_id);
}

bool Fleet::set_relay(std::string_view meter_id, bool on) {
    std::lock_guard lock(mutex_);
    find(meter_id).relay_on = on;
    return on;
}

void Fleet::resume_energy(std::string_view meter_id, double kwh) {
    if (!(kwh >= 0.0) || !std::isfinite(kwh)) throw DomainError("resumed kWh must be finite and >= 0");
    std::lock_guard lock(mutex_);
    find(meter_id).accumulator = EnergyAccumulator{kwh, std::nullopt};
}

bool Fleet::relay(std::string_view meter_id) const {
    std::lock_guard lock(mutex_);
    return find(meter_id).relay_on;
}

bool Fleet::contains(std::string_view meter_id) const {
    std::lock_guard lock(mutex_);
    return std::any_of(meters_.begin(), meters_.end(), [&](const MeterState& m) { return m.meter_id == meter_id; });
}

std::vector<std::string> Fleet::meter_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& m : meters_) ids.push_back(m.meter_id);
    return ids;
}

std::optional<std::int64_t> Fleet::last_step_ms() const {
    std::lock_guard lock(mutex_);
    return last_step_ms_;
}

std::vector<MeterState> Fleet::snapshot() const {
    std::lock_guard lock(mutex_);
    return meters_;
}

} // namespace watt::metersim
