#include "ocrlab/instance_io.h"

#include <fstream>
#include <sstream>

#include "ocrlab/error.h"
#include "ocrlab/feasibility.h"

namespace ocrlab {

using nlohmann::json;

json InstanceToJson(const Instance& instance) {
  json elements = json::array();
  for (ElementId e = 0; e < instance.size(); ++e) {
    json dist = json::array();
    for (const Atom& a : instance.dist(e).atoms()) {
      dist.push_back({a.value, a.prob});
    }
    elements.push_back({{"id", e}, {"dist", std::move(dist)}});
  }
  json orders = json::array();
  for (const WeightedOrder& w : instance.orders().finite()) {
    orders.push_back({{"weight", w.weight}, {"sequence", w.order.sequence}});
  }
  return {{"name", instance.name()},
          {"elements", std::move(elements)},
          {"feasibility", OracleToJson(instance.feasibility())},
          {"orders", std::move(orders)},
          {"metadata", instance.metadata()}};
}

Instance InstanceFromJson(const json& doc) {
  try {
    const auto& elements = doc.at("elements");
    std::vector<ValueDistribution> dists;
    dists.reserve(elements.size());
    for (size_t i = 0; i < elements.size(); ++i) {
      const json& el = elements[i];
      if (el.at("id").get<int64_t>() != static_cast<int64_t>(i)) {
        throw Error(ErrorCode::kParseError,
                    "element ids must be dense and in order; got " +
                        el.at("id").dump() + " at position " +
                        std::to_string(i));
      }
      std::vector<Atom> atoms;
      for (const json& a : el.at("dist")) {
        if (!a.is_array() || a.size() != 2) {
          throw Error(ErrorCode::kParseError, "atom must be [value, prob]");
        }
        atoms.push_back({a[0].get<double>(), a[1].get<double>()});
      }
      dists.emplace_back(std::move(atoms));
    }
    auto metadata =
        doc.value("metadata", json::object())
            .get<std::map<std::string, std::string>>();
    OrderDistribution orders;
    const json order_list = doc.value("orders", json::array());
    if (!order_list.empty()) {
      std::vector<WeightedOrder> finite;
      for (const json& o : order_list) {
        finite.push_back(
            {ArrivalOrder{o.at("sequence").get<std::vector<ElementId>>()},
             o.at("weight").get<double>()});
      }
      orders = OrderDistribution(std::move(finite));
    } else if (auto it = metadata.find("order_generator"); it != metadata.end()) {
      OrderDistribution::Generative g{it->second, 0};
      if (auto b = metadata.find("order_enumeration_bound"); b != metadata.end()) {
        g.enumeration_bound = std::stoll(b->second);
      }
      orders = OrderDistribution(std::move(g));
    }
    return Instance(doc.at("name").get<std::string>(), std::move(dists),
                    OracleFromJson(doc.at("feasibility")), std::move(orders),
                    std::move(metadata));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kParseError, ex.what());
  } catch (const std::invalid_argument& ex) {
    throw Error(ErrorCode::kParseError, ex.what());
  } catch (const std::out_of_range& ex) {
    throw Error(ErrorCode::kParseError, ex.what());
  }
}

std::string SerializeInstance(const Instance& instance) {
  return InstanceToJson(instance).dump(2) + "\n";
}

Instance ParseInstance(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kParseError, ex.what());
  }
  return InstanceFromJson(doc);
}

void SaveInstance(const Instance& instance, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  out << SerializeInstance(instance);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "write failed: " + path);
}

Instance LoadInstance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseInstance(buf.str());
}

}  // namespace ocrlab
