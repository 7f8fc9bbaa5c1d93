#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgemm/matrix.hpp"
#include "qgemm/perfmodel.hpp"
#include "qgemm/quadfp.hpp"
#include "qgemm/rgemm.hpp"

namespace qgemm {

/// The scalar arguments of one Rgemm call, in interface order.
struct GemmCallRecord {
  Transpose transa = Transpose::NoTranspose;
  Transpose transb = Transpose::NoTranspose;
  index_t m = 0, n = 0, k = 0;
  QuadFloat alpha = quad::one;
  index_t lda = 1, ldb = 1;
  QuadFloat beta = quad::zero;
  index_t ldc = 1;
  std::uint64_t ordinal = 0;

  /// Throws ArgumentError with the BLAS argument position.
  void validate() const;
  /// n = m = k = lda = ldb = ldc.
  bool square_packed() const;
  bool same_call(const GemmCallRecord& o) const;
};

struct DispatchPolicy {
  /// Disables the product condition; only m == n offloads.
  static constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t n_min = 1'000'000;
};

/// Offload when m == n or m * n * k > n_min, the product taken exactly.
bool should_offload(index_t m, index_t n, index_t k, const DispatchPolicy& policy);
bool should_offload(const GemmCallRecord& rec, const DispatchPolicy& policy);

inline constexpr const char* kTraceHeader = "RGTRACE1";

/// One tab-separated line: transa transb m n k alpha lda ldb beta ldc.
std::string format_record(const GemmCallRecord& rec);
/// Throws FormatError carrying `line_no`.
GemmCallRecord parse_record(const std::string& line, std::size_t line_no);

void trace_write_header(std::ostream& os);
void trace_record(std::ostream& os, const GemmCallRecord& rec);
/// An empty stream is an empty trace. Otherwise the first line must be the
/// header; blank lines and lines starting with '#' are skipped.
std::vector<GemmCallRecord> trace_load(std::istream& is);
std::vector<GemmCallRecord> trace_load(const std::filesystem::path& path);
void trace_save(const std::filesystem::path& path, const std::vector<GemmCallRecord>& records,
                const std::string& comment = {});

/// Mixed shapes resembling the GEMM stream of an SDP solver: square packed
/// Schur blocks, tall-skinny panels and small updates.
std::vector<GemmCallRecord> synthetic_sdp_trace(std::uint64_t seed = 2023, std::size_t calls = 800,
                                                std::size_t square_packed = 50);

struct ReplayOptions {
  bool execute = false;
  std::uint64_t seed = 1;
  GemmBackend host = ReferenceBackend{};
  GemmBackend accel = SystolicBackend{};
  CostModel cost;
};

struct ReplayReport {
  std::vector<bool> offloaded;
  std::size_t calls = 0;
  std::size_t offload_count = 0;
  std::size_t square_packed = 0;
  double modeled_seconds = 0.0;
  double host_only_seconds = 0.0;
  std::uint64_t executed_digest = 0;  ///< over C results, 0 on a dry run

  double offload_fraction() const { return calls == 0 ? 0.0 : static_cast<double>(offload_count) / calls; }
  /// Deterministic summary digest: decisions, counts and modeled times.
  std::uint64_t digest() const;
};

/// Failure of one replayed call; `call()` is the 0-based index in the trace.
class ReplayError : public std::invalid_argument {
 public:
  ReplayError(std::size_t call, int argument, const std::string& what)
      : std::invalid_argument("call " + std::to_string(call) + ": " + what), call_(call), argument_(argument) {}
  std::size_t call() const { return call_; }
  int argument() const { return argument_; }

 private:
  std::size_t call_;
  int argument_;
};

ReplayReport replay(const std::vector<GemmCallRecord>& trace, const DispatchPolicy& policy,
                    const ReplayOptions& options = {});

}  // namespace qgemm
