#pragma once

#include <stdexcept>
#include <string>

namespace fidmark {

// Thrown for every contract violation surfaced by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fidmark
