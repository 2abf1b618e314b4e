#include "hqivm/metrics.hpp"

#include <algorithm>
#include <sstream>

namespace hqivm {

std::string Counters::to_json() const {
  std::ostringstream os;
  os << "{\"storage_ops\":" << storage_ops << ",\"last_update_ops\":" << last_update_ops
     << ",\"max_update_ops\":" << max_update_ops << ",\"last_next_ops\":" << last_next_ops
     << ",\"max_next_ops\":" << max_next_ops << ",\"majors\":" << majors
     << ",\"minors\":" << minors << ",\"updates\":" << updates
     << ",\"cumulative_ops\":" << cumulative_ops << "}";
  return os.str();
}

UpdateScope::~UpdateScope() {
  std::uint64_t ops = c_.storage_ops - start_;
  c_.last_update_ops = ops;
  c_.max_update_ops = std::max(c_.max_update_ops, ops);
  c_.cumulative_ops += ops;
  ++c_.updates;
}

void record_next(Counters& c, std::uint64_t ops) {
  c.last_next_ops = ops;
  c.max_next_ops = std::max(c.max_next_ops, ops);
}

}  // namespace hqivm
