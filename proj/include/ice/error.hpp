#pragma once

#include <stdexcept>
#include <string>

namespace ice {

// Bad user-supplied data: unreadable files, malformed cells, misaligned inputs.
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// Broken internal invariant. Seeing one of these is a bug in this library,
// not in the caller's data.
class contract_error : public std::logic_error {
public:
    explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

namespace detail {

inline void require(bool ok, const char* what) {
    if (!ok) throw contract_error(what);
}

inline void require_input(bool ok, const std::string& what) {
    if (!ok) throw input_error(what);
}

} // namespace detail
} // namespace ice
