#pragma once

#include <chrono>

namespace harness {

/// Time source used by the rate limiter and retry backoff. Tests install a
/// virtual clock so waiting is instantaneous and observable.
class Clock {
public:
    using time_point = std::chrono::steady_clock::time_point;
    using duration = std::chrono::steady_clock::duration;

    virtual ~Clock() = default;
    virtual time_point now() = 0;
    virtual void sleep_until(time_point t) = 0;

    void sleep_for(duration d) { sleep_until(now() + d); }
};

class SteadyClock final : public Clock {
public:
    time_point now() override;
    void sleep_until(time_point t) override;
};

/// Process-wide wall clock instance.
Clock& steady_clock();

}  // namespace harness
