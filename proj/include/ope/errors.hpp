#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ope {

/// Failure taxonomy shared by every estimator. The harness records the kind
/// per cell instead of aborting the grid.
enum class ErrorKind {
   invalid_argument,
   empty_dataset,
   support_violation,
   degenerate_weights,
   non_convergence,
   solver_error,
   enumeration_limit,
};

std::string_view to_string(ErrorKind kind) noexcept;

class OpeError : public std::runtime_error {
  public:
   OpeError(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

   [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

  private:
   ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
   throw OpeError(kind, what);
}

inline void require(bool condition, const std::string& what)
{
   if(! condition)
      fail(ErrorKind::invalid_argument, what);
}

}  // namespace ope
