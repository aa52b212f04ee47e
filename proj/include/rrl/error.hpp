#pragma once

#include <stdexcept>
#include <string>

namespace rrl {

// Malformed or inconsistent data: bad file formats, out-of-range class
// ids, shape mismatches, non-finite values. The CLI maps this to exit
// code 2; flag/usage problems are handled by the argument parser (exit 1).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rrl
