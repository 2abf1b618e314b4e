#pragma once

#include <cstdint>
#include <string>

namespace hqivm {

/// Primitive-operation accounting. Every storage primitive (lookup, insert,
/// delete, index probe, scan step) adds one to storage_ops.
struct Counters {
  std::uint64_t storage_ops = 0;
  std::uint64_t last_update_ops = 0;
  std::uint64_t max_update_ops = 0;
  std::uint64_t last_next_ops = 0;
  std::uint64_t max_next_ops = 0;
  std::uint64_t majors = 0;
  std::uint64_t minors = 0;
  std::uint64_t updates = 0;
  // Sum of per-update ops over all updates; never decreases.
  std::uint64_t cumulative_ops = 0;

  void reset() { *this = Counters{}; }
  double amortized_update_ops() const {
    return updates == 0 ? 0.0 : static_cast<double>(cumulative_ops) / static_cast<double>(updates);
  }
  std::string to_json() const;
};

/// Measures the ops of one OnUpdate call.
class UpdateScope {
 public:
  explicit UpdateScope(Counters& c) : c_(c), start_(c.storage_ops) {}
  ~UpdateScope();
  UpdateScope(const UpdateScope&) = delete;
  UpdateScope& operator=(const UpdateScope&) = delete;

 private:
  Counters& c_;
  std::uint64_t start_;
};

void record_next(Counters& c, std::uint64_t ops);

}  // namespace hqivm
