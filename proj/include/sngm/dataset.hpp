#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace sngm {

// Row-major feature matrix plus one label per row. Labels are stored as
// doubles; classification problems validate their own label domain.
struct DatasetMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> features;  // rows * cols, row-major
  std::vector<double> labels;    // rows

  double at(std::size_t r, std::size_t c) const { return features[r * cols + c]; }
  const double* row(std::size_t r) const { return features.data() + r * cols; }
};

// Comma-separated numeric file, last column is the label. A header row is
// auto-detected: if any cell of the first row fails to parse as a number the
// row is skipped. Errors report 1-based row/column positions; row numbers
// refer to the file, including any header. Row order is preserved.
DatasetMatrix load_csv(const std::string& path);

// CIFAR-10 binary format: consecutive 3073-byte records, one label byte in
// [0, 9] followed by 3072 pixel bytes. Pixels are scaled to [0, 1] by /255.
// At most `limit` records are read when given; limit = 0 is rejected since it
// would produce an empty dataset.
DatasetMatrix load_cifar10_binary(const std::string& path,
                                  std::optional<std::size_t> limit = std::nullopt);

// Splits off the trailing floor(fraction * rows) rows as a holdout set.
// fraction must lie in [0, 1); the train part is never empty.
std::pair<DatasetMatrix, DatasetMatrix> split_holdout(const DatasetMatrix& data,
                                                      double fraction);

}  // namespace sngm
