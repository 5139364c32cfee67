#pragma once

#include <cassert>
#include <type_traits>
#include <utility>
#include <variant>

namespace modelsync {

// Tag wrapper so Result<T, E> can be built unambiguously when T and E coincide.
template <class E>
struct Failure {
  E error;
};

template <class E>
Failure<std::decay_t<E>> fail(E&& error) {
  return {std::forward<E>(error)};
}

// Value-or-error return type (C++20 predates std::expected).
template <class T, class E>
class Result {
 public:
  Result(T value) : storage_(std::in_place_index<0>, std::move(value)) {}
  template <class F>
  Result(Failure<F> failure) : storage_(std::in_place_index<1>, E(std::move(failure.error))) {}

  bool ok() const { return storage_.index() == 0; }
  explicit operator bool() const { return ok(); }

  T& value() & {
    assert(ok());
    return std::get<0>(storage_);
  }
  const T& value() const& {
    assert(ok());
    return std::get<0>(storage_);
  }
  T&& value() && {
    assert(ok());
    return std::get<0>(std::move(storage_));
  }
  const E& error() const {
    assert(!ok());
    return std::get<1>(storage_);
  }

  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }
  T& operator*() & { return value(); }
  const T& operator*() const& { return value(); }

 private:
  std::variant<T, E> storage_;
};

struct Unit {
  friend bool operator==(Unit, Unit) = default;
};

template <class E>
using Status = Result<Unit, E>;

}  // namespace modelsync
