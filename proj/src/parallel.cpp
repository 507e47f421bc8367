#include "canon/parallel.hpp"

namespace canon {

namespace {
int g_threads = 1;
}

int parallel_threads() { return g_threads; }
void set_parallel_threads(int n) { g_threads = n < 1 ? 1 : n; }

}  // namespace canon
