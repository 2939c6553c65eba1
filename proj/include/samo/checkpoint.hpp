#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "samo/encoder.hpp"
#include "samo/objective.hpp"

namespace samo {

enum class Objective { kSamo, kOcSoftmax, kSoftmax };

std::string objective_name(Objective objective);
Objective parse_objective(const std::string& name);

/// Trained model snapshot: the encoder plus exactly one scoring block, which
/// one depending on the training objective.
struct Checkpoint {
  EncoderParams encoder;
  std::optional<AttractorSet> attractors;  // samo
  std::optional<OcCenter> center;          // oc_softmax
  std::optional<SoftmaxHead> head;         // softmax

  Objective objective() const;
};

/// Line-oriented text format, 17 significant digits, bitwise round-trip:
///   samo-ckpt v1
///   dims=<d0,d1,...>
///   activation=relu|tanh
///   W0 <values row-major> / b0 <values> / ...
/// then one scoring block:
///   attractors n=<S> d=<D>   followed by `s=<id> <D values>` lines, or
///   center d=<D>             followed by `w <D values>`, or
///   softmax_head d=<D>       followed by `W2 <2*D values>` and `b2 <2 values>`.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace samo
