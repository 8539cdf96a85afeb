#include "mgaudit/llm.hpp"

namespace mgaudit::llm {

AgreementResult cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size())
    throw DataError("cohen_kappa: annotation lists differ in length (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  if (a.empty()) throw DataError("cohen_kappa: no items");
  AgreementResult r;
  r.n_items = a.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] != 0 && a[i] != 1) || (b[i] != 0 && b[i] != 1))
      throw DataError("cohen_kappa: labels must be 0 or 1 (item " + std::to_string(i) + ")");
    ++r.confusion[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])];
  }
  const double n = static_cast<double>(r.n_items);
  const double a1 = static_cast<double>(r.confusion[1][0] + r.confusion[1][1]) / n;
  const double b1 = static_cast<double>(r.confusion[0][1] + r.confusion[1][1]) / n;
  r.observed = static_cast<double>(r.confusion[0][0] + r.confusion[1][1]) / n;
  r.expected = a1 * b1 + (1 - a1) * (1 - b1);
  // Chance agreement is 1 only when both annotators use one identical label.
  if (r.confusion[0][1] + r.confusion[1][0] == 0 && (a1 == 0.0 || a1 == 1.0)) {
    r.kappa = 1.0;
    return r;
  }
  r.kappa = (r.observed - r.expected) / (1.0 - r.expected);
  return r;
}

}  // namespace mgaudit::llm
