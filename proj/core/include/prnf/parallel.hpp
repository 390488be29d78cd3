#pragma once

#include <functional>

namespace prnf {

// Runs fn(chunk) for chunk in [0, num_chunks) on up to `threads` workers.
// Workers pull chunk indices from a shared counter; each fn writes into its
// own pre-allocated slot and the caller reduces those slots in index order,
// so numerical results never depend on the thread count. The first exception
// thrown by any fn is rethrown here after all workers join.
void parallel_for_chunks(int num_chunks, int threads, const std::function<void(int)>& fn);

int hardware_threads();

} // namespace prnf
