#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dmphy/nucleotide.hpp"

namespace dmphy {

// Aligned nucleotide sequences, one row per tip, stored as indicator masks.
//
// `sites` always holds the raw alignment (n tips x S columns).
// `patterns`/`weights` hold the distinct-column compression used by the
// likelihood; a freshly parsed alignment carries the identity compression
// (every raw column is its own pattern with weight 1).
struct Alignment {
  using SiteMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

  std::vector<std::string> labels;
  SiteMatrix sites;      // n x S indicator masks
  SiteMatrix patterns;   // n x P
  Eigen::VectorXi weights;  // P entries, each >= 1, summing to S

  int tip_count() const { return static_cast<int>(labels.size()); }
  int site_count() const { return static_cast<int>(sites.cols()); }
  int pattern_count() const { return static_cast<int>(patterns.cols()); }

  int row_of(const std::string& label) const;  // throws ValidationError if absent

  friend bool operator==(const Alignment& a, const Alignment& b) {
    return a.labels == b.labels && a.sites == b.sites && a.patterns == b.patterns &&
           a.weights == b.weights;
  }
};

// Parses FASTA with IUPAC nucleotide codes. Labels are the header up to the
// first whitespace and must be unique; records must all have the same length.
Alignment parse_fasta(std::istream& in);
Alignment parse_fasta_string(const std::string& text);
Alignment parse_fasta_file(const std::string& path);

void write_fasta(const Alignment& a, std::ostream& out);
std::string write_fasta_string(const Alignment& a);

// Deduplicates alignment columns into weighted site patterns. Likelihoods over
// (patterns, weights) equal likelihoods over the raw columns exactly.
Alignment compress_patterns(const Alignment& a);

// Resamples the S raw columns uniformly with replacement (column bootstrap).
// The result carries the identity compression.
Alignment bootstrap_columns(const Alignment& a, std::uint64_t seed);

}  // namespace dmphy
