#pragma once

#include <stdexcept>
#include <string>

namespace ndtsel {

// Every failure surfaced by the library is an Error; the CLI turns it into a
// one-line diagnostic and a non-zero exit status.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ndtsel
