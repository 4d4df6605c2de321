#include "lmkit/parallel.hpp"

#include <cstdlib>
#include <string>

namespace lmkit {

int default_thread_count() {
  const char* value = std::getenv("LMKIT_THREADS");
  if (!value) return 1;
  try {
    const int n = std::stoi(value);
    return n > 0 ? n : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

}  // namespace lmkit
