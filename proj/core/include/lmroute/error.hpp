#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lmroute {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input: bad files, violated preconditions, unknown ids.
class InputError : public Error {
 public:
  using Error::Error;
};

// A (model, query) pair required by an operation has no entry.
class MissingPairError : public InputError {
 public:
  MissingPairError(std::string model_id, std::string query_id)
      : InputError("missing entry for model '" + model_id + "' and query '" + query_id + "'"),
        model_id_(std::move(model_id)),
        query_id_(std::move(query_id)) {}

  const std::string& model_id() const noexcept { return model_id_; }
  const std::string& query_id() const noexcept { return query_id_; }

 private:
  std::string model_id_;
  std::string query_id_;
};

// Training produced a non-finite loss.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t epoch) : Error(what), epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// A performance floor exceeds the best attainable total.
class InfeasibleError : public Error {
 public:
  InfeasibleError(double required, double attainable)
      : Error("infeasible: required total performance " + std::to_string(required) +
              " exceeds attainable maximum " + std::to_string(attainable)),
        required_(required),
        attainable_(attainable) {}

  double required() const noexcept { return required_; }
  double attainable() const noexcept { return attainable_; }

 private:
  double required_;
  double attainable_;
};

}  // namespace lmroute
