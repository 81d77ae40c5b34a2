#pragma once

#include "watt/cli/scenario.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace watt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs the `watt` command line. args[0] is the program name. Never throws:
// errors are reported on `err` and mapped onto the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct ServeOptions {
    std::string host = "0.0.0.0";
    int port = 8080;
    std::optional<std::filesystem::path> data_dir;
    std::optional<ScenarioConfig> scenario;
    // Step a live fleet from the scenario in wall-clock time, `speed` sample
    // intervals per interval of real time.
    bool simulate = false;
    double speed = 1.0;
};

// Serves the HTTP API until `stop` becomes true. Throws Error when the
// port cannot be bound.
void serve(const ServeOptions& options, const std::atomic<bool>& stop, std::ostream& log,
           std::atomic<int>* bound_port = nullptr);

} // namespace watt::cli
