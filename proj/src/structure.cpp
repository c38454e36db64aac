#include "bwdep/structure.hpp"

#include <algorithm>
#include <sstream>

namespace bwdep {

Partition::Partition(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw InputError("partition needs at least two groups");
  offsets_.reserve(dims_.size());
  for (int d : dims_) {
    if (d < 1) throw InputError("partition dims must be positive integers");
    offsets_.push_back(total_);
    total_ += d;
  }
}

Partition Partition::parse(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw InputError("empty entry in dims string '" + text + "'");
    const std::string tok = item.substr(b, e - b + 1);
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw InputError("invalid dims entry '" + tok + "' in '" + text + "'");
    dims.push_back(v);
  }
  return Partition(std::move(dims));
}

Partition Partition::singletons(int q) { return Partition(std::vector<int>(std::max(q, 0), 1)); }

int Partition::max_dim() const { return dims_.empty() ? 0 : *std::max_element(dims_.begin(), dims_.end()); }

int Partition::group_of(int variable) const {
  if (variable < 0 || variable >= total_) throw InputError("variable index out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), variable);
  return static_cast<int>(it - offsets_.begin()) - 1;
}

bool Partition::is_canonical() const { return std::is_sorted(dims_.begin(), dims_.end()); }

std::string Partition::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(dims_[i]);
  }
  return out;
}

}  // namespace bwdep
