#ifndef OCRLAB_INSTANCE_IO_H_
#define OCRLAB_INSTANCE_IO_H_

#include <string>

#include "nlohmann/json.hpp"
#include "ocrlab/core.h"

namespace ocrlab {

// {name, elements: [{id, dist: [[value, prob], ...]}], feasibility: {kind,
// params}, orders: [{weight, sequence}], metadata}. A generative order
// distribution is stored as an empty `orders` array plus the metadata keys
// order_generator and order_enumeration_bound.
nlohmann::json InstanceToJson(const Instance& instance);
Instance InstanceFromJson(const nlohmann::json& doc);

// Pretty-printed with sorted keys and a trailing newline.
std::string SerializeInstance(const Instance& instance);
Instance ParseInstance(const std::string& text);

void SaveInstance(const Instance& instance, const std::string& path);
Instance LoadInstance(const std::string& path);

}  // namespace ocrlab

#endif  // OCRLAB_INSTANCE_IO_H_
