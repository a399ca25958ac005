#include "gla/instance.hpp"

#include <ostream>

namespace gla {

GlaInstance::GlaInstance(SeqTensor q, SeqTensor k, SeqTensor v, GateSeq gates)
    : q_(std::move(q)), k_(std::move(k)), v_(std::move(v)), gates_(std::move(gates)) {
  const std::size_t L = q_.rows();
  if (L == 0) throw ShapeError("instance has an empty sequence");
  if (k_.rows() != L || v_.rows() != L || gates_.length() != L) {
    throw ShapeError("sequence lengths disagree: q " + shape_string(q_) + ", k " +
                     shape_string(k_) + ", v " + shape_string(v_) + ", gates " +
                     std::to_string(gates_.length()));
  }
  if (k_.cols() != q_.cols() || gates_.dk() != q_.cols()) {
    throw ShapeError("key dimension disagrees between q, k and log_alpha");
  }
  if (gates_.dv() != v_.cols()) throw ShapeError("value dimension disagrees between v and log_beta");
  if (q_.cols() == 0 || v_.cols() == 0) throw ShapeError("feature dimensions must be at least 1");
}

std::ostream& operator<<(std::ostream& os, const CostReport& cost) {
  return os << "flops = " << cost.flops << "\nstate_writes = " << cost.state_writes
            << "\nstate_reads = " << cost.state_reads
            << "\nrecompute_passes = " << cost.recompute_passes << "\n";
}

void require_cotangent_shape(const GlaInstance& inst, const SeqTensor& d_out) {
  if (d_out.rows() != inst.length() || d_out.cols() != inst.dv()) {
    throw ShapeError("output cotangent has shape " + shape_string(d_out) + ", expected " +
                     std::to_string(inst.length()) + "x" + std::to_string(inst.dv()));
  }
}

}  // namespace gla
