#include "watt/metersim/gaussian.hpp"

#include <cmath>
#include <numbers>

namespace watt::metersim {

namespace {

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

double GaussianSource::uniform_open_closed() {
    return static_cast<double>((engine_() >> 11) + 1) * kTwoPow53Inv;
}

double GaussianSource::uniform_closed_open() { return static_cast<double>(engine_() >> 11) * kTwoPow53Inv; }

double GaussianSource::next() {
    if (spare_) {
        const double z = *spare_;
        spare_.reset();
        return z;
    }
    const double u1 = uniform_open_closed();
    const double u2 = uniform_closed_open();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

std::uint64_t derive_meter_seed(std::uint64_t scenario_seed, std::string_view meter_id) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : meter_id) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(scenario_seed) ^ h);
}

} // namespace watt::metersim
