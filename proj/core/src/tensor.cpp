#include "interact/tensor.hpp"

#include <atomic>

namespace interact {

namespace {
std::atomic<bool> g_finite_checks{false};
}

void set_debug_finite_checks(bool enabled) { g_finite_checks.store(enabled); }
bool debug_finite_checks() { return g_finite_checks.load(); }

}  // namespace interact
