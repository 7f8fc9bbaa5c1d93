#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qgemm/dispatch.hpp"
#include "qgemm/perfmodel.hpp"
#include "qgemm/rgemm.hpp"
#include "qgemm/systolic.hpp"

namespace qgemm::cli {

/// Versioned CSV table. The first line is "# <schema>", then a header row.
/// Timing columns are excluded from digest().
class Csv {
 public:
  Csv(std::string schema, std::vector<std::string> columns, std::vector<std::string> timing_columns = {});

  void add_row(std::vector<std::string> cells);
  const std::string& schema() const { return schema_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  void write(std::ostream& os) const;
  void print_table(std::ostream& os) const;
  std::uint64_t digest() const;

 private:
  std::string schema_;
  std::vector<std::string> columns_;
  std::vector<bool> timing_;
  std::vector<std::vector<std::string>> rows_;
};

/// Checks the schema line, the header and the cell count of every row.
bool validate_csv(std::istream& in, const std::string& schema, const std::vector<std::string>& columns,
                  std::string* why = nullptr);

struct BenchResult {
  index_t m = 0, n = 0, k = 0;
  ArrayConfig cfg;
  double wall_t_exec = 0.0;
  double model_t_exec = 0.0;
  double gflops_wall = 0.0;
  double gflops_model = 0.0;
  std::uint64_t cycles = 0;
  std::uint64_t dram_bytes = 0;
  double e_l1 = 0.0;
  bool matches_reference = false;
};

struct SquareOptions {
  std::vector<index_t> n_list = {64, 128, 256};
  ArrayConfig cfg;
  int repeats = 3;
  std::uint64_t seed = 1;
};

struct TileOptions {
  // (k, n) with m = k.
  std::vector<std::pair<index_t, index_t>> shapes = {{4096, 512}, {4096, 2048}, {2048, 2048}, {4096, 4096}};
  std::vector<index_t> m_tiles = {24, 32, 48, 64, 96, 128, 192, 256};
  double scale = 1.0;
  ArrayConfig cfg;
  BoardSpec board{"arria10", 34.2};
};

struct RectOptions {
  char vary = 'n';  ///< 'n': m and k fixed; 'k': m and n fixed
  index_t m = 4096;
  index_t fixed = 4096;
  std::vector<index_t> values;  ///< empty: powers of two, 32 .. 4096 (n) or 16384 (k)
  double scale = 1.0;
  ArrayConfig cfg;
  BoardSpec board{"arria10", 34.2};
};

struct LuOptions {
  std::optional<Matrix> input;  ///< factor this matrix instead of random ones; n_list ignored
  std::vector<index_t> n_list = {128, 256};
  std::vector<index_t> b_list = {32, 108, 128};
  GemmBackend backend = ReferenceBackend{};
  int repeats = 1;
  std::uint64_t seed = 1;
};

struct DispatchOptions {
  std::vector<GemmCallRecord> trace;
  std::vector<std::uint64_t> n_min_list = {1000, 10000, 100000, 1000000, 10000000, 100000000,
                                           DispatchPolicy::kNever};
  ReplayOptions replay;
};

index_t scaled(index_t dim, double scale);

BenchResult run_square(index_t n, const ArrayConfig& cfg, int repeats, std::uint64_t seed);

Csv bench_square(const SquareOptions& o);
Csv bench_tile(const TileOptions& o);
Csv bench_rect(const RectOptions& o);
Csv bench_lu(const LuOptions& o);
/// True when some bench-lu row carries the singular marker.
bool has_singular_rows(const Csv& lu_csv);
Csv bench_dispatch(const DispatchOptions& o);

inline const std::vector<std::string> kLuColumns = {"n", "b", "t", "gflops", "residual", "backend"};
inline constexpr const char* kLuSchema = "qgemm.bench-lu/1";

}  // namespace qgemm::cli
