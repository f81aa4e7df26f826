#pragma once

#include <stdexcept>
#include <string>

namespace dmphy {

// Invalid user input: malformed files, out-of-range parameters, inconsistent
// shapes. The CLI maps this to exit code 3.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed FASTA/Newick/CSV input, with whatever position context the parser
// has at the point of failure.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace dmphy
