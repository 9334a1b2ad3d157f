#include "folqr/gl.hpp"

#include <map>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <utility>

namespace folqr::simulate {

std::vector<double> gl_weights(double alpha, std::size_t count) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::invalid_argument("gl_weights: alpha must be in (0, 1]");
  std::vector<double> w(count + 1);
  w[0] = 1.0;
  for (std::size_t j = 1; j <= count; ++j)
    w[j] = w[j - 1] * (1.0 - (alpha + 1.0) / static_cast<double>(j));
  return w;
}

namespace {

std::shared_mutex cache_mutex;
std::map<double, std::shared_ptr<const std::vector<double>>> cache;  // keyed by alpha

}  // namespace

std::shared_ptr<const std::vector<double>> gl_weights_cached(double alpha, std::size_t count) {
  {
    std::shared_lock lock(cache_mutex);
    auto it = cache.find(alpha);
    if (it != cache.end() && it->second->size() >= count + 1) return it->second;
  }
  auto table = std::make_shared<const std::vector<double>>(gl_weights(alpha, count));
  std::unique_lock lock(cache_mutex);
  auto& slot = cache[alpha];
  if (!slot || slot->size() < table->size()) slot = std::move(table);
  return slot;
}

}  // namespace folqr::simulate
