#include "rankae/noise.hpp"

#include <iostream>
#include <stdexcept>

#include "rankae/rng.hpp"

namespace rankae {

namespace {

void check_rate(const NoiseSpec& spec) {
  if (spec.rate < 0.0 || spec.rate > 1.0)
    throw std::invalid_argument("noise rate must be in [0,1]");
}

}  // namespace

Dataset inject_missing(const Dataset& d, const NoiseSpec& spec,
                       NoiseStats* stats) {
  check_rate(spec);
  Rng base(spec.seed);
  Dataset out;
  out.num_features = d.num_features;
  out.num_labels = d.num_labels;
  out.instances.reserve(d.instances.size());
  long removed = 0;
  for (std::size_t i = 0; i < d.instances.size(); ++i) {
    Rng rng = base.fork(i);
    Instance inst;
    inst.features = d.instances[i].features;
    for (int label : d.instances[i].labels.ids) {
      if (rng.next_double() < spec.rate)
        ++removed;
      else
        inst.labels.ids.push_back(label);
    }
    out.instances.push_back(std::move(inst));
  }
  if (stats != nullptr) stats->removed = removed;
  return out;
}

Dataset inject_flip(const Dataset& d, const NoiseSpec& spec, NoiseStats* stats) {
  check_rate(spec);

  double total_labels = 0;
  for (const Instance& inst : d.instances) total_labels += inst.labels.size();
  const double cardinality =
      d.instances.empty() ? 0.0 : total_labels / double(d.instances.size());
  if (spec.rate * d.num_labels > 5.0 * cardinality && cardinality > 0) {
    std::cerr << "warning: flip rate " << spec.rate << " over L=" << d.num_labels
              << " labels adds ~" << spec.rate * d.num_labels
              << " labels per instance, far above the average cardinality "
              << cardinality << "\n";
  }

  Rng base(spec.seed);
  Dataset out;
  out.num_features = d.num_features;
  out.num_labels = d.num_labels;
  out.instances.reserve(d.instances.size());
  long removed = 0, added = 0;
  for (std::size_t i = 0; i < d.instances.size(); ++i) {
    Rng rng = base.fork(i);
    const LabelSet& y = d.instances[i].labels;
    Instance inst;
    inst.features = d.instances[i].features;
    std::size_t yi = 0;
    for (int l = 0; l < d.num_labels; ++l) {
      const bool present = yi < y.ids.size() && y.ids[yi] == l;
      if (present) ++yi;
      const bool flip = rng.next_double() < spec.rate;
      if (present != flip) inst.labels.ids.push_back(l);
      if (present && flip) ++removed;
      if (!present && flip) ++added;
    }
    out.instances.push_back(std::move(inst));
  }
  if (stats != nullptr) {
    stats->removed = removed;
    stats->added = added;
  }
  return out;
}

Dataset inject_noise(const Dataset& d, const NoiseSpec& spec, NoiseStats* stats) {
  return spec.mode == NoiseMode::missing ? inject_missing(d, spec, stats)
                                         : inject_flip(d, spec, stats);
}

}  // namespace rankae
