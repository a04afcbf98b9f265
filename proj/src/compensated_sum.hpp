#pragma once

#include <cmath>

namespace ope::detail {

/// Neumaier compensated summation, so that reorderings of the same terms agree
/// to a few ulps.
class CompensatedSum {
  public:
   void add(double x) noexcept
   {
      const double t = sum_ + x;
      if(std::abs(sum_) >= std::abs(x))
         comp_ += (sum_ - t) + x;
      else
         comp_ += (x - t) + sum_;
      sum_ = t;
   }

   CompensatedSum& operator+=(double x) noexcept
   {
      add(x);
      return *this;
   }

   [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

  private:
   double sum_ = 0.0;
   double comp_ = 0.0;
};

}  // namespace ope::detail
