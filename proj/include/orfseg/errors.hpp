#pragma once

#include <stdexcept>
#include <string>

namespace orfseg {

// Error taxonomy mirrors the CLI exit-code contract:
//   io_error -> 1, validation_error -> 2, empty_dataset_error -> 3.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct empty_dataset_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace orfseg
