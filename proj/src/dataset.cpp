#include "sngm/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sngm/errors.hpp"

namespace sngm {

namespace {

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0' && std::isfinite(out);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

DatasetMatrix load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);

  DatasetMatrix data;
  std::string line;
  std::size_t file_row = 0;
  bool first_content_row = true;

  while (std::getline(in, line)) {
    ++file_row;
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);

    std::vector<double> values(cells.size());
    std::size_t bad_col = 0;
    bool row_ok = true;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(trim(cells[c]), values[c])) {
        row_ok = false;
        bad_col = c + 1;
        break;
      }
    }

    if (!row_ok) {
      if (first_content_row) {
        // Header row: skip it.
        first_content_row = false;
        continue;
      }
      throw ValidationError("non-numeric cell at row " + std::to_string(file_row) +
                            ", col " + std::to_string(bad_col) + " in " + path);
    }
    first_content_row = false;

    if (values.size() < 2) {
      throw ValidationError("row " + std::to_string(file_row) +
                            " needs at least one feature and a label");
    }
    const std::size_t feature_count = values.size() - 1;
    if (data.rows == 0) {
      data.cols = feature_count;
    } else if (feature_count != data.cols) {
      throw ValidationError("ragged row " + std::to_string(file_row) + ": expected " +
                            std::to_string(data.cols + 1) + " cells, got " +
                            std::to_string(values.size()));
    }
    data.features.insert(data.features.end(), values.begin(), values.end() - 1);
    data.labels.push_back(values.back());
    ++data.rows;
  }

  if (data.rows == 0) throw ValidationError("empty dataset: " + path);
  return data;
}

DatasetMatrix load_cifar10_binary(const std::string& path,
                                  std::optional<std::size_t> limit) {
  constexpr std::size_t kRecordBytes = 3073;
  constexpr std::size_t kPixels = 3072;

  if (limit && *limit == 0) throw ValidationError("empty dataset: record limit is 0");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);

  DatasetMatrix data;
  data.cols = kPixels;
  std::vector<unsigned char> record(kRecordBytes);
  std::size_t index = 0;

  while (!limit || index < *limit) {
    in.read(reinterpret_cast<char*>(record.data()), kRecordBytes);
    const std::streamsize got = in.gcount();
    if (got == 0) break;
    if (got != static_cast<std::streamsize>(kRecordBytes)) {
      throw ValidationError("truncated record " + std::to_string(index + 1) + " in " +
                            path + ": got " + std::to_string(got) + " of " +
                            std::to_string(kRecordBytes) + " bytes");
    }
    if (record[0] > 9) {
      throw ValidationError("record " + std::to_string(index + 1) +
                            ": label byte " + std::to_string(record[0]) +
                            " outside [0, 9]");
    }
    data.labels.push_back(static_cast<double>(record[0]));
    for (std::size_t p = 0; p < kPixels; ++p) {
      data.features.push_back(static_cast<double>(record[1 + p]) / 255.0);
    }
    ++data.rows;
    ++index;
  }

  if (data.rows == 0) throw ValidationError("empty dataset: " + path);
  return data;
}

std::pair<DatasetMatrix, DatasetMatrix> split_holdout(const DatasetMatrix& data,
                                                      double fraction) {
  if (fraction < 0.0 || fraction >= 1.0) {
    throw ValidationError("holdout_fraction must lie in [0, 1)");
  }
  const auto holdout_rows = static_cast<std::size_t>(fraction * static_cast<double>(data.rows));
  const std::size_t train_rows = data.rows - holdout_rows;
  if (train_rows == 0) throw ValidationError("holdout split leaves no training rows");

  DatasetMatrix train;
  train.rows = train_rows;
  train.cols = data.cols;
  train.features.assign(data.features.begin(),
                        data.features.begin() + static_cast<std::ptrdiff_t>(train_rows * data.cols));
  train.labels.assign(data.labels.begin(),
                      data.labels.begin() + static_cast<std::ptrdiff_t>(train_rows));

  DatasetMatrix holdout;
  holdout.rows = holdout_rows;
  holdout.cols = data.cols;
  holdout.features.assign(data.features.begin() + static_cast<std::ptrdiff_t>(train_rows * data.cols),
                          data.features.end());
  holdout.labels.assign(data.labels.begin() + static_cast<std::ptrdiff_t>(train_rows),
                        data.labels.end());
  return {std::move(train), std::move(holdout)};
}

}  // namespace sngm
