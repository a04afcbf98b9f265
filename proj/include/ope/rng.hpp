#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace ope {

/// Stream identifiers keep independent consumers of one root seed apart.
enum class StreamTag : std::uint64_t {
   trajectory = 1,
   rollout = 2,
   bootstrap = 3,
};

/// Engine for stream `index` of `tag` under `root`. Streams are derived by
/// seeding from (root, tag, index), so draws do not depend on the order in
/// which streams are consumed.
inline std::mt19937_64 make_stream(std::uint64_t root, StreamTag tag, std::uint64_t index)
{
   std::seed_seq seq{
      static_cast<std::uint32_t>(root),
      static_cast<std::uint32_t>(root >> 32),
      static_cast<std::uint32_t>(tag),
      static_cast<std::uint32_t>(index),
      static_cast<std::uint32_t>(index >> 32)};
   return std::mt19937_64(seq);
}

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(std::mt19937_64& rng)
{
   return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Index drawn from a discrete distribution given as a probability row.
template < typename Row >
std::size_t sample_index(const Row& probs, std::size_t n, std::mt19937_64& rng)
{
   const double u = uniform01(rng);
   double cum = 0.0;
   std::size_t last_positive = 0;
   for(std::size_t k = 0; k < n; ++k) {
      const double p = probs(k);
      if(p <= 0.0)
         continue;
      cum += p;
      last_positive = k;
      if(u < cum)
         return k;
   }
   return last_positive;
}

}  // namespace ope
