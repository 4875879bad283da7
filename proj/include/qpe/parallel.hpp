#pragma once

#include <cstddef>
#include <functional>

namespace qpe {

//! Fixed work partition: chunk boundaries depend only on `count` and
//! `chunk_size`, never on the worker count, so per-chunk partial results can
//! be merged in chunk order for bit-identical output.
struct ChunkPlan {
    std::size_t count;
    std::size_t chunk_size;

    std::size_t chunks() const { return count == 0 ? 0 : (count + chunk_size - 1) / chunk_size; }
};

//! 0 means all hardware threads.
unsigned resolve_threads(unsigned requested);

//! Calls body(chunk, begin, end) once per chunk, spread over `threads` workers.
void parallel_chunks(const ChunkPlan& plan, unsigned threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

} // namespace qpe
