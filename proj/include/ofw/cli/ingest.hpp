#pragma once

// Readers for external observation files.
//
//   MC triplets:     "k,l,y" per line, 0-based integer indices, optional
//                    "k,l,y" header on the first line.
//   Labeled sparse:  "<label> <index>:<value> ..." per line, label in
//                    {-1, 0, +1} (0 read as -1), 1-based indices.
//
// Both streams read lazily; malformed lines raise IngestError naming the line.

#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ofw/gradients.hpp"

namespace ofw::cli {

class IngestError : public ArgumentError {
 public:
  IngestError(const std::string& source, std::int64_t line, const std::string& message);
  std::int64_t line() const { return line_; }

 private:
  std::int64_t line_;
};

class McTripletStream final : public SampleStream {
 public:
  /// Indices must satisfy k < m1 and l < m2.
  McTripletStream(std::unique_ptr<std::istream> in, std::string source, Index m1, Index m2);
  std::optional<Sample> next() override;

 private:
  std::unique_ptr<std::istream> in_;
  std::string source_;
  Index m1_;
  Index m2_;
  std::int64_t line_ = 0;
  bool seen_data_ = false;
};

class LabeledSparseStream final : public SampleStream {
 public:
  /// Feature indices must be <= dim.
  LabeledSparseStream(std::unique_ptr<std::istream> in, std::string source, Index dim);
  std::optional<Sample> next() override;
  Index dim() const { return dim_; }

 private:
  std::unique_ptr<std::istream> in_;
  std::string source_;
  Index dim_;
  std::int64_t line_ = 0;
};

/// Parses one labeled-sparse line; nullopt for blank or '#' lines.
std::optional<LabeledVector> parse_labeled_line(const std::string& line, const std::string& source,
                                                std::int64_t line_no, std::optional<Index> dim);

std::unique_ptr<McTripletStream> ingest_mc_triplets(const std::string& path, Index m1, Index m2);

/// Scans the file once for the largest index when `dim` is absent.
std::unique_ptr<LabeledSparseStream> ingest_labeled_sparse(const std::string& path, std::optional<Index> dim = {});

/// Largest feature index in a labeled-sparse file.
Index infer_dim(std::istream& in, const std::string& source);

void write_mc_triplets(std::ostream& out, const std::vector<McSample>& samples, bool header = true);
/// Zero entries of sparse vectors are kept; dense vectors write only nonzeros.
void write_labeled_sparse(std::ostream& out, const std::vector<LabeledVector>& samples);

}  // namespace ofw::cli
