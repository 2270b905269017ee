#include "mechforge/parallel.hpp"

#include <cstdlib>
#include <string>

namespace mechforge {

int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("MECHFORGE_THREADS")) {
    try {
      int cap = std::stoi(env);
      if (cap >= 1) n = std::min(n, cap);
    } catch (...) {
      // Unparseable cap is ignored.
    }
  }
  return n;
}

}  // namespace mechforge
