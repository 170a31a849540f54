#pragma once

#include <string>
#include <vector>

#include "roomgraph/corrector.hpp"
#include "roomgraph/scene.hpp"

namespace roomgraph::testing {

struct ViolationFixture {
  std::string name;
  SceneGraph graph;
  ViolationKind kind;
  std::string subject;
};

// Five or more hand-built graphs per violation kind; each contains at least
// the listed violation.
std::vector<ViolationFixture> violation_fixtures();

// Twenty graphs that detect no violations.
std::vector<SceneGraph> clean_fixtures();

}  // namespace roomgraph::testing
