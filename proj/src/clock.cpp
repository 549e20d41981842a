#include "harness/clock.hpp"

#include <thread>

namespace harness {

Clock::time_point SteadyClock::now() { return std::chrono::steady_clock::now(); }

void SteadyClock::sleep_until(time_point t) { std::this_thread::sleep_until(t); }

Clock& steady_clock() {
    static SteadyClock instance;
    return instance;
}

}  // namespace harness
