#pragma once

#include <optional>

#include "hilbertlab/errors.hpp"

/// Kind of the hilbertlab::Error thrown by f, or nullopt when nothing was thrown.
template <typename F>
std::optional<hilbertlab::ErrorKind> kind_of(F&& f) {
  try {
    f();
  } catch (const hilbertlab::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}
