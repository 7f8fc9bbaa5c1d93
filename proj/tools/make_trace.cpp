// Writes the bundled synthetic trace.
#include <cstdio>
#include <string>

#include "qgemm/dispatch.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s OUT.rgtrace\n", argv[0]);
    return 1;
  }
  const auto trace = qgemm::synthetic_sdp_trace();
  qgemm::trace_save(argv[1], trace,
                    "synthetic SDP-like Rgemm trace, not recorded from a solver\n"
                    "generator: synthetic_sdp_trace(seed 2023, 800 calls, 50 square packed)");
  std::printf("%zu calls\n", trace.size());
  return 0;
}
