#include "psr/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace psr::parallel {
namespace {

unsigned default_thread_count() {
  if (const char* env = std::getenv("PSR_THREADS")) {
    try {
      const long value = std::stol(env);
      if (value > 0) return static_cast<unsigned>(value);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<unsigned>& budget() {
  static std::atomic<unsigned> value{default_thread_count()};
  return value;
}

}  // namespace

void set_thread_count(unsigned count) {
  budget().store(count == 0 ? default_thread_count() : count);
}

unsigned thread_count() { return budget().load(); }

}  // namespace psr::parallel
