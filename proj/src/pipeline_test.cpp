#include <doctest.h>

#include "ltl/pipeline.hpp"

using namespace ltl;

namespace {
LabelledSample sample(ObjectClass c) {
  LabelledSample s;
  s.label = c;
  return s;
}
}  // namespace

TEST_CASE("under-sampling caps each class inside the window") {
  std::vector<LabelledSample> stream(100, sample(ObjectClass::Car));
  for (int i = 0; i < 10; ++i) stream.push_back(sample(ObjectClass::Pedestrian));
  const auto kept = undersample(stream, {34, 34, 34}, 100);
  std::size_t cars = 0, peds = 0;
  for (const auto& s : kept) (s.label == ObjectClass::Car ? cars : peds) += 1;
  CHECK(cars == 34);
  CHECK(peds == 10);
}

TEST_CASE("the window slides") {
  UnderSampler u(4, {1, 1, 1});
  CHECK(u.admit(ObjectClass::Car));
  CHECK_FALSE(u.admit(ObjectClass::Car));
  CHECK_FALSE(u.admit(ObjectClass::Car));
  CHECK_FALSE(u.admit(ObjectClass::Car));  // first pass still within the previous 3
  CHECK(u.admit(ObjectClass::Car));        // it has left the window
}

TEST_CASE("volumetric templates") {
  auto box = [](double w, double d, double h) {
    Box3D b;
    b.max_x = w;
    b.max_y = d;
    b.max_z = h;
    return b;
  };
  CHECK(volumetric_template(box(0.6, 0.6, 1.7)) == ObjectClass::Pedestrian);
  CHECK(volumetric_template(box(1.8, 0.6, 1.7)) == ObjectClass::Cyclist);
  CHECK(volumetric_template(box(1.8, 4.2, 1.5)) == ObjectClass::Car);
  CHECK_FALSE(volumetric_template(box(0.3, 0.3, 3.0)).has_value());
}
