#include "coreg/config.hpp"

#include <cmath>

#include "coreg/common.hpp"

namespace coreg {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoCoPL: return "no_co_pl";
    case Variant::SupCont: return "sup_cont";
    case Variant::NoProto: return "no_proto";
    case Variant::NoU: return "no_U";
  }
  throw std::invalid_argument("unknown variant value");
}

Variant parse_variant(const std::string& name) {
  if (name == "full") return Variant::Full;
  if (name == "no_co_pl") return Variant::NoCoPL;
  if (name == "sup_cont") return Variant::SupCont;
  if (name == "no_proto") return Variant::NoProto;
  if (name == "no_U") return Variant::NoU;
  throw std::invalid_argument("unknown variant: " + name);
}

void CoRegConfig::validate() const {
  if (warm_epochs < 0 || total_epochs < warm_epochs)
    throw std::invalid_argument("need 0 <= warm_epochs <= total_epochs");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (weak_views < 1) throw std::invalid_argument("weak_views (K) must be >= 1");
  if (!(sharpen_t > 0.0) || !(proto_t > 0.0) || !(contrast_t > 0.0))
    throw std::invalid_argument("temperatures must be > 0");
  if (proto_gamma < 0.0 || proto_gamma > 1.0)
    throw std::invalid_argument("proto_gamma must be in [0,1]");
  if (beta1 < 0.0 || beta2 < 0.0) throw std::invalid_argument("betas must be >= 0");
  if (w_threshold < 0.0 || w_threshold > 1.0)
    throw std::invalid_argument("w_threshold must be in [0,1]");
  if (!(mixup_alpha > 0.0)) throw std::invalid_argument("mixup_alpha must be > 0");
  if (!(lr >= 0.0)) throw std::invalid_argument("lr must be >= 0");
  if (ema_m < 0.0 || ema_m >= 1.0) throw std::invalid_argument("ema_m must be in [0,1)");
  if (hidden.empty() || proj_dim < 1) throw std::invalid_argument("bad network shape");
  if (queue_capacity < 1) throw std::invalid_argument("queue_capacity must be >= 1");
  augment.validate();
}

double CoRegConfig::lr_at(int epoch) const {
  if (!cosine_lr || total_epochs <= warm_epochs || epoch < warm_epochs) return lr;
  double t = static_cast<double>(epoch - warm_epochs) /
             static_cast<double>(total_epochs - warm_epochs);
  return lr * 0.5 * (1.0 + std::cos(M_PI * t));
}

CoRegConfig ablation_variant(const CoRegConfig& cfg, Variant variant) {
  CoRegConfig out = cfg;
  out.variant = variant;
  if (variant == Variant::NoProto) out.beta1 = 0.0;
  return out;
}

CoRegConfig ablation_variant(const CoRegConfig& cfg, const std::string& name) {
  return ablation_variant(cfg, parse_variant(name));
}

}  // namespace coreg
