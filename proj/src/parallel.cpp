#include "hyforest/parallel.hpp"

#include <cstdlib>
#include <string>

#include "hyforest/error.hpp"

namespace hyforest {

int resolve_thread_count(int requested) {
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("HYFOREST_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1 || v > 4096) {
            throw ValidationError(std::string("HYFOREST_THREADS must be a positive integer, got '") + env + "'");
        }
        return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace hyforest
