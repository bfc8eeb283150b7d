#include "uhd/bucket_plan.hpp"
#include "uhd/toy_encoder.hpp"

namespace uhd {

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "gelu") return Activation::gelu;
  if (name == "relu") return Activation::relu;
  throw InvalidArgument("unknown activation '" + name + "' (identity|tanh|gelu|relu)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::gelu: return "gelu";
    case Activation::relu: return "relu";
  }
  return "?";
}

BucketMode parse_bucket_mode(const std::string& name) {
  if (name == "single") return BucketMode::single;
  if (name == "vertical") return BucketMode::vertical;
  if (name == "horizontal") return BucketMode::horizontal;
  throw InvalidArgument("unknown bucket mode '" + name + "' (single|vertical|horizontal)");
}

std::string to_string(BucketMode m) {
  switch (m) {
    case BucketMode::single: return "single";
    case BucketMode::vertical: return "vertical";
    case BucketMode::horizontal: return "horizontal";
  }
  return "?";
}

}  // namespace uhd
