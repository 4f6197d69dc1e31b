#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "kc/constraint.hpp"

namespace kc {

// Factory for `o <tag> <param>* 0` lines. Params must not contain the bare
// token "0" (it terminates the line).
using OpaqueFactory =
    std::function<std::shared_ptr<const OpaqueConstraint>(const std::vector<std::string>&)>;

struct OpaqueRegistry {
  std::map<std::string, OpaqueFactory> factories;
};

// .csys text format, line oriented:
//   p csys <nvars> <nconstraints>
//   <lit>* 0                      clause
//   x <lit>* 0                    sum of literal values is odd
//   d <m> <r> <lit>* 0            sum of literal values == r (mod m)
//   g <k> <lit>* 0                sum of literal values >= k
//   w <theta> (<weight> <lit>)* 0 weighted sum >= theta
//   f <arity> <hex> <var>* 0      truth table, little-endian over listed vars
//   o <tag> <param>* 0            registered opaque constraint
//   c ...                         comment
// An empty-scope XOR with even parity has no x-line encoding; serialize_system
// rejects it.
ConstraintSystem parse_system(std::string_view text, const OpaqueRegistry* reg = nullptr);
std::string serialize_system(const ConstraintSystem& f);

ConstraintSystem load_system(const std::string& path, const OpaqueRegistry* reg = nullptr);
void save_system(const ConstraintSystem& f, const std::string& path);

}  // namespace kc
