#pragma once

#include <string>

#include "voxmap/query.hpp"

namespace voxmap {

// Command-line specs for regions and predicates.
//
// Regions:   aabb:x0,y0,z0,x1,y1,z1 | sphere:cx,cy,cz,r | all
// Predicates: boolean expressions over the atoms
//   state in (unknown, free, occupied)
//   has_label <id>
//   top_label = <id>
//   updated_before <t>
//   updated_at_or_after <t>
//   true
// combined with and / or / not and parentheses.
//
// Both throw ParseError with the byte offset of the failure.

Region parse_region(const std::string& spec);
Predicate parse_predicate(const std::string& spec);

}  // namespace voxmap
