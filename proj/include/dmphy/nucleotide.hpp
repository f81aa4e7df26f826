#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>

#include "dmphy/errors.hpp"

namespace dmphy {

// Nucleotide states in canonical order. All rate matrices, limiting
// probabilities and indicator vectors in this codebase use A,C,G,T.
enum Nucleotide : int { kA = 0, kC = 1, kG = 2, kT = 3 };

// Indicator vector over {A,C,G,T}, stored as a 4-bit mask (bit i = state i).
// An unambiguous base has one bit set; IUPAC ambiguity codes set several;
// N and '-' set all four.
class NucleotideVector {
 public:
  NucleotideVector() : mask_(0) {}
  explicit constexpr NucleotideVector(std::uint8_t mask) : mask_(mask) {}

  static NucleotideVector from_iupac(char code);
  char to_iupac() const;

  std::uint8_t mask() const { return mask_; }
  int count() const { return std::popcount(mask_); }
  bool has(int state) const { return (mask_ >> state) & 1; }
  bool valid() const { return mask_ >= 1 && mask_ <= 15; }

  Eigen::Vector4d indicator() const {
    return Eigen::Vector4d(has(kA) ? 1.0 : 0.0, has(kC) ? 1.0 : 0.0,
                           has(kG) ? 1.0 : 0.0, has(kT) ? 1.0 : 0.0);
  }

  friend bool operator==(NucleotideVector a, NucleotideVector b) { return a.mask_ == b.mask_; }

 private:
  std::uint8_t mask_;
};

inline NucleotideVector NucleotideVector::from_iupac(char code) {
  switch (code) {
    case 'A': case 'a': return NucleotideVector(0b0001);
    case 'C': case 'c': return NucleotideVector(0b0010);
    case 'G': case 'g': return NucleotideVector(0b0100);
    case 'T': case 't':
    case 'U': case 'u': return NucleotideVector(0b1000);
    case 'R': case 'r': return NucleotideVector(0b0101);  // A/G
    case 'Y': case 'y': return NucleotideVector(0b1010);  // C/T
    case 'S': case 's': return NucleotideVector(0b0110);  // C/G
    case 'W': case 'w': return NucleotideVector(0b1001);  // A/T
    case 'K': case 'k': return NucleotideVector(0b1100);  // G/T
    case 'M': case 'm': return NucleotideVector(0b0011);  // A/C
    case 'B': case 'b': return NucleotideVector(0b1110);  // C/G/T
    case 'D': case 'd': return NucleotideVector(0b1101);  // A/G/T
    case 'H': case 'h': return NucleotideVector(0b1011);  // A/C/T
    case 'V': case 'v': return NucleotideVector(0b0111);  // A/C/G
    case 'N': case 'n':
    case '-': case '?': return NucleotideVector(0b1111);
    default:
      throw ParseError(std::string("invalid nucleotide code '") + code + "'");
  }
}

inline char NucleotideVector::to_iupac() const {
  static constexpr char kCodes[16] = {'!', 'A', 'C', 'M', 'G', 'R', 'S', 'V',
                                      'T', 'W', 'Y', 'H', 'K', 'D', 'B', 'N'};
  if (!valid()) throw ValidationError("empty nucleotide indicator");
  return kCodes[mask_];
}

}  // namespace dmphy
