#pragma once

#include <memory>
#include <span>
#include <string>

#include "rtumpc/plant/dataset.hpp"
#include "rtumpc/types.hpp"

namespace rtumpc::models {

/// Thermal-dynamics predictor bound to a fixed past and a fixed exogenous
/// forecast. Only the planned controls vary between calls, which is what an
/// MPC objective needs. Implementations are immutable once built and safe to
/// call from several threads.
class HorizonPredictor {
public:
    virtual ~HorizonPredictor() = default;

    [[nodiscard]] virtual int horizon() const noexcept = 0;
    [[nodiscard]] virtual int zones() const noexcept = 0;
    /// codes: ladder codes laid out [step * zones + zone], length horizon*zones.
    /// dtheta: predicted IAT change per step, same layout.
    virtual void predict(std::span<const int> codes, std::span<double> dtheta) const = 0;
};

/// Data-driven model of zone IAT changes, dtheta^k = f(x^{k-w}, ..., x^k).
class ThermalModel {
public:
    virtual ~ThermalModel() = default;

    [[nodiscard]] virtual std::string kind() const = 0;
    [[nodiscard]] virtual int zones() const noexcept = 0;
    /// Number of past records bind() needs.
    [[nodiscard]] virtual int history_length() const noexcept = 0;
    /// history: most recent records, oldest first (at least history_length()).
    /// forecast: exogenous state of every step in the prediction horizon.
    /// Throws Error(InsufficientHistory) when the history is too short.
    [[nodiscard]] virtual std::unique_ptr<HorizonPredictor> bind(std::span<const plant::Record> history,
                                                                 std::span<const ExogenousState> forecast) const = 0;
};

} // namespace rtumpc::models
