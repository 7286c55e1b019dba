#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace sfl {

// One verified property: name, worst deviation observed, and the limit it was
// held against. A check with ok=false names the violated axiom in `name`.
struct CheckItem {
  std::string name;
  double deviation = 0.0;
  double tol = 0.0;
  bool ok = true;
  std::string detail;  // e.g. offending index or vertex
};

struct CheckReport {
  std::vector<CheckItem> items;

  bool passed() const {
    for (const auto& it : items)
      if (!it.ok) return false;
    return true;
  }
  double worst() const {
    double w = 0.0;
    for (const auto& it : items) w = std::max(w, it.deviation);
    return w;
  }
  void add(std::string name, double deviation, double tol, std::string detail = {}) {
    items.push_back({std::move(name), deviation, tol, deviation <= tol, std::move(detail)});
  }
  void add_flag(std::string name, bool ok, std::string detail = {}) {
    items.push_back({std::move(name), ok ? 0.0 : 1.0, 0.0, ok, std::move(detail)});
  }
  void merge(const CheckReport& other) {
    items.insert(items.end(), other.items.begin(), other.items.end());
  }
  // First failing item's name, or empty when all passed.
  std::string first_failure() const {
    for (const auto& it : items)
      if (!it.ok) return it.name + (it.detail.empty() ? "" : " [" + it.detail + "]");
    return {};
  }
};

}  // namespace sfl
