#include "sasim/case.hpp"

#include <string>

#include "sasim/error.hpp"

namespace sasim {

std::vector<std::complex<double>> Case::power_flow_voltages() const {
  std::vector<std::complex<double>> v;
  v.reserve(buses.size());
  for (const auto& b : buses) v.push_back(std::polar(b.vm, b.va));
  return v;
}

std::size_t Case::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return i;
  }
  throw Error(ErrorKind::case_reference, "unknown bus id " + std::to_string(id));
}

}  // namespace sasim
