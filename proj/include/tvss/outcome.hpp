#pragma once

#include <stdexcept>
#include <utility>
#include <variant>

namespace tvss {

// Value-or-error for protocol outcomes. Precondition violations throw instead.
template <class T, class E>
class Outcome {
public:
    Outcome(T value) : v_(std::in_place_index<0>, std::move(value)) {}
    Outcome(E error) : v_(std::in_place_index<1>, error) {}

    bool ok() const { return v_.index() == 0; }
    explicit operator bool() const { return ok(); }

    T& value() {
        if (!ok()) throw std::logic_error("outcome holds an error");
        return std::get<0>(v_);
    }
    const T& value() const {
        if (!ok()) throw std::logic_error("outcome holds an error");
        return std::get<0>(v_);
    }
    E error() const {
        if (ok()) throw std::logic_error("outcome holds a value");
        return std::get<1>(v_);
    }

private:
    std::variant<T, E> v_;
};

}  // namespace tvss
