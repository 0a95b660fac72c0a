#pragma once

#include <stdexcept>
#include <string>

namespace tubeswarm {

/// A precondition of a public operation was not met by the caller.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Input data (waypoints, scenario files, traces) could not be turned into a valid object.
class InvalidInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A simulation produced non-finite state and was aborted.
class SimulationDiverged : public std::runtime_error {
public:
    SimulationDiverged(const std::string& what, int robot_id, long tick)
        : std::runtime_error(what), robot_id_(robot_id), tick_(tick) {}

    [[nodiscard]] int robotId() const noexcept { return robot_id_; }
    [[nodiscard]] long tick() const noexcept { return tick_; }

private:
    int robot_id_;
    long tick_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ContractViolation(message);
}

}  // namespace tubeswarm
